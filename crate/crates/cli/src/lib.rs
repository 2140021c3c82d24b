//! Command-line front end for the `vdlo` library.

pub mod app;
pub mod config;
pub mod error;
pub mod files;
pub mod render;

pub use error::CliError;
