//! Library surface of the command line: the strict config schema and the
//! built-in validation suite, exposed for integration tests and embedding.

pub mod config;
pub mod validate;
