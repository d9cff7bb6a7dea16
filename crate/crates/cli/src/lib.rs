//! Command line harness for `bregmax`: input files, subcommands, the
//! verification suite and versioned JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod io;
pub mod oracle;
pub mod report;
pub mod verify;

pub use commands::{cmd_bbar, cmd_conjecture_scan, cmd_divergence, cmd_maximize, cmd_project};
pub use error::{CliError, CliResult};
pub use io::{load_direction, load_instance, load_pm, ToleranceOverrides};
pub use report::{render_json, render_table, Output, SCHEMA};
pub use verify::{cmd_verify, run_verify, VerifyReport, CHECK_NAMES};
