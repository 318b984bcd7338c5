//! Configuration, dispatch and result emission for the `cyldrift` binary.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod commands;
pub mod config;
pub mod demo;
pub mod emit;

pub use commands::run_command;
pub use config::{parse_config, ConfigError, RunConfig};
