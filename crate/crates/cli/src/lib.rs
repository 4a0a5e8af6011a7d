//! Config-driven experiment pipelines for the `shearlab3d` command.

pub mod commands;
pub mod config;
pub mod report;
