//! Command-line plumbing for `allab`: configuration, reports and pictures.

pub mod config;
pub mod render;
pub mod report;
pub mod run;
