//! Config-driven scenarios behind the command-line front end.

mod commands;
mod config;

pub use commands::{
    adjudicate, cmd_characteristics, cmd_diagnose, cmd_identity_check, cmd_run, cmd_validate, diagnostics_csv,
    diagnostics_header, diagnostics_record, BranchRow, Verdict, MAX_IDENTITY_DIM, POSITIVITY_TOL, RESIDUAL_FAIL, RESIDUAL_TOL,
};
pub use config::{
    AssemblySection, GridSection, ModelSection, OutputSection, RunRepresentation, RunSection, Scenario, ScenarioConfig,
    TimeSection,
};
