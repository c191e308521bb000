//! Configuration loading, suite dispatch and report emission for the
//! `apaths` command-line tool.

pub mod config;
pub mod report;
pub mod suites;

use std::time::Instant;

use apaths_core::{CheckRecord, Execution};

pub use config::{load_config, load_config_file, load_config_with, ConfigError, Overrides, RunConfig, Task};
pub use report::{emit_convergence_table, emit_report, ConvergenceRow, Report, Table};
use suites::{SuiteError, SuiteOutput};

/// A finished run: the report and, for tasks that produce one, a table.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub table: Option<Table>,
}

pub fn run_suite(cfg: &RunConfig) -> Outcome {
    run_suite_with(cfg, Execution::default())
}

/// Dispatch on the task. Errors raised by the core are recorded as a
/// failed `<task>/error` record instead of aborting the run.
pub fn run_suite_with(cfg: &RunConfig, exec: Execution) -> Outcome {
    let start = Instant::now();
    let result: Result<SuiteOutput, SuiteError> = match cfg.task {
        Task::CheckAlgebroid => suites::check_algebroid(cfg, exec).map(Into::into),
        Task::IntegratePath => suites::integrate_path(cfg),
        Task::Homotopy => suites::homotopy(cfg, exec),
        Task::OracleSuite => suites::oracle_suite(cfg, exec).map(Into::into),
        Task::SymplecticSuite => suites::symplectic_suite(cfg, exec).map(Into::into),
        Task::EtaleSuite => suites::etale_suite(cfg, exec).map(Into::into),
        Task::Convergence => suites::convergence(cfg, exec),
    };
    let output = result.unwrap_or_else(|e| SuiteOutput {
        records: vec![CheckRecord {
            name: format!("{}/error: {e}", cfg.task),
            residual: f64::NAN,
            tol: 0.0,
            pass: false,
        }],
        table: None,
    });
    let mut report = Report::new(cfg.seed(), config_echo(cfg), output.records);
    report.wall_ms = start.elapsed().as_millis() as u64;
    Outcome {
        report,
        table: output.table,
    }
}

/// The effective configuration without output paths, which do not affect
/// results.
pub fn config_echo(cfg: &RunConfig) -> serde_json::Value {
    let mut raw = cfg.raw.clone();
    raw.output = Default::default();
    serde_json::to_value(raw).expect("configs serialize")
}
