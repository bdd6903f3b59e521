//! Command-line front end for `srtlab-core`: scenario files, run
//! manifests, CSV/JSON exports and the `srtlab` subcommands.

pub mod cli;
pub mod config;
pub mod export;
pub mod manifest;

pub use config::ConfigError;
pub use manifest::RunManifest;
