//! Command-line layer over `pnin-core`: configuration files, CSV/JSON
//! output, trace input and the subcommands of the `pnin` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, CliResult, ErrorKind};
pub use exec::Parallel;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PNIN_OUT_DIR";
