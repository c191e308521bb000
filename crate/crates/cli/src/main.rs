use std::path::PathBuf;
use std::process::ExitCode;

use apaths_cli::{emit_report, load_config_file, run_suite, Overrides, Task};
use clap::Parser;

/// Run a numerical check suite and write a JSON report.
#[derive(Parser, Debug)]
#[command(name = "apaths", version)]
struct Cli {
    /// One of: check-algebroid, integrate-path, homotopy, oracle-suite,
    /// symplectic-suite, etale-suite, convergence.
    task: Task,
    #[arg(long)]
    config: PathBuf,
    /// Report path; the report goes to stdout when neither this nor the
    /// config names one.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "nt")]
    n_t: Option<usize>,
    #[arg(long = "neps")]
    n_eps: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        task: Some(cli.task),
        seed: cli.seed,
        n_t: cli.n_t,
        n_eps: cli.n_eps,
        report: cli.report,
        csv: cli.csv,
    };
    let cfg = match load_config_file(&cli.config, &overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run_suite(&cfg);
    let report = &outcome.report;
    for r in &report.records {
        eprintln!(
            "{} {}: residual {:e} (tol {:e})",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.residual,
            r.tol
        );
    }
    let written = match &cfg.raw.output.report {
        Some(path) => emit_report(report, path).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{}", report.to_json());
            Ok(())
        }
    };
    let written = written.and_then(|()| match (&cfg.raw.output.csv, &outcome.table) {
        (Some(path), Some(t)) => t.emit(path).map_err(|e| format!("cannot write {}: {e}", path.display())),
        (Some(_), None) => {
            eprintln!("note: task {} produces no table", cfg.task);
            Ok(())
        }
        _ => Ok(()),
    });
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
