//! Command-line front end for `trapforge-core`. Reads a JSON config and
//! writes CSV tables with JSON summaries.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod thermal;

pub use cli::run;
pub use config::RunConfig;
pub use error::CliError;
