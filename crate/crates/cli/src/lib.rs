//! Library surface of the monodiss driver: configuration, artifact writers,
//! subcommand implementations, and the verification presets.

pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
