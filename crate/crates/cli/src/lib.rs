//! Command-line driver: configuration, dispatch and result emission for the
//! `supremum-core` experiments.

pub mod config;
pub mod error;
pub mod points;
pub mod run;
pub mod set_spec;
pub mod table;
pub mod verify;

pub use config::{Command, Format, RunConfig};
pub use error::{CliError, Result};
pub use run::{emit, run, RunRecord};
