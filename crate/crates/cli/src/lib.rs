//! Experiment driver: configuration, run manifests, and the `lsner`
//! subcommands.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod manifest;
