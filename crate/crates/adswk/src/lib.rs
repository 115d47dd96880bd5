//! Command line laboratory around `adswk-core`: configuration files,
//! output formats, reproducible experiment runs, and the acceptance
//! checks that gate a release.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod manifest;
