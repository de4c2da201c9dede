//! Configuration, verification suites and report output behind the `mqaw`
//! binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

pub use commands::{cmd_check, cmd_moments, cmd_scan, cmd_validate, write_outputs};
pub use config::{load_config, parse_config, RunConfig, Tolerances};
pub use report::{Report, Residual, SuiteReport};
pub use suites::SuiteKind;
