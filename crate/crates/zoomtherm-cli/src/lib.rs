//! Command-line pipeline on top of the `zoomtherm` library: shared flat
//! config, deterministic JSON/CSV artifacts, and the acceptance selftest.

pub mod commands;
pub mod config;
pub mod selftest;
