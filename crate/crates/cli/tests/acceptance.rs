//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use apaths_cli::suites::{
    connection_independence, development_defects, model_algebroid, multiplicativity, reduced_bracket,
    sample_families,
};
use apaths_cli::config::Model;
use apaths_cli::{load_config_file, run_suite_with, Overrides, Report, RunConfig, Task};
use apaths_core::algebroid::{cotangent_algebroid, poisson_jacobiator_at, PoissonBivector};
use apaths_core::oracle::MatrixRepresentation;
use apaths_core::path::{EpsilonGrid, TimeGrid};
use apaths_core::symplectic::BracketOracle;
use apaths_core::{CheckRecord, Execution};

const EXEC: Execution = Execution::Parallel;

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str, task: Task, tweak: impl FnOnce(&mut Overrides)) -> RunConfig {
    let mut o = Overrides {
        task: Some(task),
        ..Overrides::default()
    };
    tweak(&mut o);
    load_config_file(&configs().join(name), &o).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn poisson(name: &str) -> PoissonBivector {
    match load(name, Task::CheckAlgebroid, |_| {}).model {
        Model::Poisson(pi) => pi,
        m => panic!("{name}: expected a poisson model, got {}", m.kind()),
    }
}

fn run(cfg: &RunConfig) -> Vec<CheckRecord> {
    run_suite_with(cfg, EXEC).report.records
}

fn find<'a>(records: &'a [CheckRecord], name: &str) -> Result<&'a CheckRecord, String> {
    records
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| format!("no record named {name}"))
}

fn expect(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn all_pass(records: &[CheckRecord]) -> Result<(), String> {
    match records.iter().find(|r| !r.pass) {
        None => Ok(()),
        Some(r) => Err(format!("{} residual {:.3e} tol {:.3e}", r.name, r.residual, r.tol)),
    }
}

fn so3_homotopies() -> Outcome {
    let cfg = load("so3.json", Task::OracleSuite, |_| {});
    let alg = model_algebroid(&cfg.model).map_err(|e| e.to_string())?;
    let rep = MatrixRepresentation::so3();
    let defects = development_defects(&alg, &rep, 50, 129, 129, 11, EXEC).map_err(|e| e.to_string())?;
    let worst = defects.iter().copied().fold(0.0, f64::max);
    if worst >= 1e-4 {
        return Err(format!("worst relative defect {worst:.3e} over 50 families, tol 1e-4"));
    }
    let conv = run_suite_with(&load("so3_convergence.json", Task::Convergence, |_| {}), EXEC);
    all_pass(&conv.report.records)?;
    let ratios: Vec<String> = conv
        .report
        .records
        .iter()
        .filter(|r| r.name.starts_with("convergence/ratio-"))
        .map(|r| format!("{}={:.1}", &r.name["convergence/ratio-".len()..], r.residual))
        .collect();
    expect(
        !ratios.is_empty(),
        format!("worst relative defect {worst:.2e} < 1e-4 over 50 families; ratios {} >= 8", ratios.join(" ")),
    )
}

fn connection_free() -> Outcome {
    let cfg = load("so3_dual.json", Task::OracleSuite, |_| {});
    let alg = model_algebroid(&cfg.model).map_err(|e| e.to_string())?;
    let (time, eps) = (TimeGrid::new(129).unwrap(), EpsilonGrid::new(129).unwrap());
    let fams = sample_families(&alg, true, 20, time, eps, 21, EXEC).map_err(|e| e.to_string())?;
    let (diff, size) = connection_independence(&alg, &fams, 21, EXEC).map_err(|e| e.to_string())?;
    expect(
        diff < 1e-4 && size > 1e-2,
        format!("max |b - b_nabla| {diff:.2e} < 1e-4 over 20 families (max |b| {size:.2e})"),
    )
}

fn zero_poisson_oracle() -> Outcome {
    let records = run(&load("zero_poisson.json", Task::OracleSuite, |_| {}));
    all_pass(&records)?;
    let mut laws = Vec::new();
    for law in ["concatenation", "reverse", "constant"] {
        let r = find(&records, &format!("zero-poisson/{law}"))?;
        if r.tol != 1e-6 {
            return Err(format!("{law}: tol {:e}, expected 1e-6", r.tol));
        }
        laws.push(format!("{law} {:.1e}", r.residual));
    }
    let misses = find(&records, "zero-poisson/decision-disagreements")?.residual
        + find(&records, "zero-poisson/decision-vs-integral")?.residual;
    expect(
        misses == 0.0,
        format!("100 pairs, 0 decision disagreements; {} < 1e-6", laws.join(", ")),
    )
}

fn reduced_brackets() -> Outcome {
    let plane = reduced_bracket(&poisson("plane.json"), BracketOracle::SymplecticChart, 10, 50, 31)
        .map_err(|e| e.to_string())?;
    let zero = reduced_bracket(&poisson("zero_poisson.json"), BracketOracle::ZeroPoisson, 10, 50, 31)
        .map_err(|e| e.to_string())?;
    expect(
        plane < 1e-12 && zero == 0.0,
        format!("pair groupoid {plane:.2e} < 1e-12; zero bivector {zero:e} == 0 over 10 pairs"),
    )
}

fn multiplicative_form() -> Outcome {
    let time = TimeGrid::new(129).unwrap();
    let mut lines = Vec::new();
    for name in ["so3_dual.json", "plane.json"] {
        let alg = cotangent_algebroid(&poisson(name));
        let records = multiplicativity(&alg, time, 100, 1e-12, 41, EXEC).map_err(|e| e.to_string())?;
        all_pass(&records).map_err(|e| format!("{name}: {e}"))?;
        let split = find(&records, "multiplicativity/split")?;
        let straddle = find(&records, "multiplicativity/straddle-within-junction-bound")?;
        lines.push(format!(
            "{}: split {:.2e} < 1e-12, straddle {:.2e} <= bound {:.2e}",
            name.trim_end_matches(".json"),
            split.residual,
            straddle.residual,
            straddle.tol
        ));
    }
    Ok(format!("100 trials; {}", lines.join("; ")))
}

fn kernel_containment() -> Outcome {
    let fine = |o: &mut Overrides| {
        o.n_t = Some(129);
        o.n_eps = Some(129);
    };
    let h = 1.0 / 128.0;
    let so3_tol = 100.0 * (h * h + h * h);
    let mut lines = Vec::new();
    for (name, tol) in [("zero_poisson.json", 1e-10), ("so3_dual.json", so3_tol)] {
        let records = run(&load(name, Task::SymplecticSuite, fine));
        let r = find(&records, "kernel-containment")?;
        if !r.pass || (r.tol - tol).abs() > 1e-15 * tol {
            return Err(format!("{name}: pairing {:.3e} tol {:.3e}, expected tol {tol:.3e}", r.residual, r.tol));
        }
        lines.push(format!("{}: {:.2e} < {:.2e}", name.trim_end_matches(".json"), r.residual, tol));
    }
    Ok(format!("50 probes on 129x129; {}", lines.join("; ")))
}

fn etale_bracket() -> Outcome {
    let records = run(&load("z2_inversion.json", Task::EtaleSuite, |_| {}));
    all_pass(&records)?;
    let pinned = [
        ("form-invariance", 1e-9),
        ("arrow-invariance", 1e-9),
        ("bracket-invariance", 1e-9),
        ("bracket-jacobi", 1e-6),
        ("presentation/copies-2", 1e-12),
        ("presentation/copies-3", 1e-12),
    ];
    let mut parts = Vec::new();
    for (name, tol) in pinned {
        let r = find(&records, name)?;
        if r.tol != tol {
            return Err(format!("{name}: tol {:e}, expected {tol:e}", r.tol));
        }
        parts.push(format!("{name} {:.1e}", r.residual));
    }
    Ok(parts.join(", "))
}

fn axioms() -> Outcome {
    let mut checked = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let cfg = load(&name, Task::CheckAlgebroid, |_| {});
        let Model::Poisson(pi) = &cfg.model else { continue };
        if name == "non_jacobi.json" {
            let j = poisson_jacobiator_at(pi, &[0.0, 0.0, 1.0]).map_err(|e| e.to_string())?;
            if j.abs() < 0.5 {
                return Err(format!("non-Jacobi bivector: jacobiator at (0,0,1) is {j:.3e}"));
            }
            let records = run(&cfg);
            if find(&records, "poisson_jacobi")?.pass {
                return Err("non-Jacobi bivector passed the Jacobi check".into());
            }
            continue;
        }
        if cfg.samples(100) < 100 {
            return Err(format!("{name}: fewer than 100 samples"));
        }
        let records = run(&cfg);
        for check in ["anchor_homomorphism", "section_jacobi"] {
            let r = find(&records, check)?;
            if !r.pass || r.tol > 1e-6 {
                return Err(format!("{name} {check}: residual {:.3e} tol {:.3e}", r.residual, r.tol));
            }
        }
        checked.push(name.trim_end_matches(".json").to_string());
    }
    expect(
        checked.len() >= 5,
        format!("anchor and section Jacobi < 1e-6 on {}; non-Jacobi bivector rejected", checked.join(", ")),
    )
}

/// Report bytes with the timing line removed.
fn masked(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn reproducible() -> Outcome {
    let runs = [
        ("check-algebroid", "so3_dual.json"),
        ("check-algebroid", "non_jacobi.json"),
        ("check-algebroid", "z2_inversion.json"),
        ("integrate-path", "weighted_plane.json"),
        ("homotopy", "constant_family.json"),
        ("homotopy", "so3_dual.json"),
        ("oracle-suite", "plane.json"),
        ("oracle-suite", "so3.json"),
        ("oracle-suite", "tangent_plane.json"),
        ("symplectic-suite", "so3_dual.json"),
        ("etale-suite", "z2_inversion.json"),
        ("convergence", "so3_convergence.json"),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (task, config) in runs {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let report = dir.path().join(format!("{k}.json"));
            let csv = dir.path().join(format!("{k}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_apaths"))
                .arg(task)
                .arg("--config")
                .arg(configs().join(config))
                .args(["--seed", "5", "--report"])
                .arg(&report)
                .arg("--csv")
                .arg(&csv)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            if status.code() == Some(2) {
                return Err(format!("{task} {config}: exited with a configuration error"));
            }
            let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
            serde_json::from_str::<Report>(&text).map_err(|e| format!("{task} {config}: {e}"))?;
            outputs.push((masked(&text), std::fs::read(&csv).ok()));
            let _ = std::fs::remove_file(&csv);
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{task} {config}: reports differ between runs"));
        }
        compared += 1;
    }
    Ok(format!("{compared} task/config runs byte-identical across two runs with seed 5"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("homotopy equation matches the so(3) development oracle", so3_homotopies),
        ("homotopy end values do not depend on the connection", connection_free),
        ("zero-Poisson decisions and functoriality", zero_poisson_oracle),
        ("reduced bracket equals the Poisson bracket", reduced_brackets),
        ("path-space form is multiplicative", multiplicative_form),
        ("homotopy directions lie in the kernel", kernel_containment),
        ("invariant bracket on the Z/2 orbifold", etale_bracket),
        ("algebroid axioms of shipped bivectors", axioms),
        ("reports are reproducible for a fixed seed", reproducible),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS {title}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {title}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
