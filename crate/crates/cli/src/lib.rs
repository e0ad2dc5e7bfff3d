//! Experiment runner for the index laboratory.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod operator_spec;
pub mod output;
pub mod suite;

pub use config::{ExperimentConfig, ExperimentName};
pub use error::{CliError, CliResult};
pub use experiments::{execute, run, Context, Outcome};
pub use output::{ResultRecord, Table, SCHEMA};
