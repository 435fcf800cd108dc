//! Command-line front end of the verification toolkit: configuration
//! parsing, run orchestration and report emission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;

pub use config::{parse_config, Command, RunConfig};
pub use run::{run, Overrides, Status, FAILED_MARKER};
