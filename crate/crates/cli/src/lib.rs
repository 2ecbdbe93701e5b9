//! Front end of `plate-modes`: run configuration, the CSV commands and the
//! `verify` suite. The binary is a thin argument parser over this crate.

pub mod checks;
pub mod commands;
pub mod config;
