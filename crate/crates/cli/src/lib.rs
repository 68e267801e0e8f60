//! Experiment runner around `tcm-core`: configuration files, seeded initial
//! data, trajectory output, parameter sweeps, the inequality lab and offline
//! decay fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod initial;

pub use error::{CliError, CliResult};
