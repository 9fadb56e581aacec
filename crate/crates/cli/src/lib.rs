//! The `xconv` command-line tool and its HTTP session service.

pub mod commands;
pub mod server;

pub use commands::run;
