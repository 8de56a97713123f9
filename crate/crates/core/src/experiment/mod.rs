//! Experiment orchestration: configuration, step planning, convergence runs
//! and the verification battery.

mod config;
mod plan;
mod report;
mod run;
mod verify;

pub use config::{
    ExperimentConfig, FunctionalSection, GridSection, ModelKind, ModelSection, Phi, ReferenceKind,
    ReferenceSection, ReportSection, SimulationSection, DEFAULTS,
};
pub use plan::{plan_steps, regression_error_term, Plan};
pub use report::{fmt_g12, loglog_slope, RateReport, RateRow, CSV_HEADER};
pub use run::{
    build_model, crr_reference, run_experiment, simulate_batch, LevelSetup, RunOutcome,
};
pub use verify::{verify_suite, CheckResult, VerifyOptions, VerifyReport};
