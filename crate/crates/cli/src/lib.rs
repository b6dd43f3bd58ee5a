//! Command-line front-end for `qkdsim-core`: scenario files in, JSON or CSV
//! reports out.

pub mod error;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::{exit, CliError};
pub use report::{emit_report, Format};
pub use run::{run_scenario, Report, SCHEMA_VERSION};
pub use scenario::{parse_scenario, Scenario, ScenarioKind};
