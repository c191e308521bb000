//! Task bodies. Each returns its records in declaration order; errors from
//! the core become failed records in [`crate::run_suite`].

use apaths_core::algebroid::{
    check_anchor_homomorphism, check_poisson_jacobi, check_section_jacobi, constants_jacobiator, cotangent_algebroid,
    lie_algebra_algebroid, Algebroid, AlgebroidError, Chart, PoissonBivector, Sampling, StructureConstants,
};
use apaths_core::etale::{
    bracket_jacobiator, check_arrow_invariance, check_invariance, check_presentation_independence,
    function_invariance_defect, invariant_poisson_bracket, refine_atlas, CoordForm, EtaleError, FiniteActionGroupoid,
};
use apaths_core::expr::Expr;
use apaths_core::oracle::{
    check_oracle_functoriality, log_derivative_oracle, random_connection, FlatCurve, FunctorialitySuite, LinearFamily,
    MatrixRepresentation, Oracle, OracleClass, OracleError, RotationFamily,
};
use apaths_core::path::{
    check_intermediate_slices, default_homotopy_tol, default_path_tol, is_homotopic_along_family,
    solve_base_path, solve_homotopy_equation, validate_apath, A0Path, APath, EpsilonGrid, PathError, PathFamily,
    TimeGrid,
};
use apaths_core::sampling::{stream, symmetric_vector};
use apaths_core::symplectic::{
    check_kernel_containment, check_multiplicativity, default_kernel_tol, oracle_reduced_bracket, BracketOracle,
    SymplecticError,
};
use apaths_core::{CheckRecord, Execution};
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use thiserror::Error;

use crate::config::{CurveSpec, FamilyKind, FamilySpec, Model, PathSpec, RunConfig};
use crate::report::{convergence_rows, convergence_table, Table};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Etale(#[from] EtaleError),
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, SuiteError>;

/// Records plus an optional CSV table.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub records: Vec<CheckRecord>,
    pub table: Option<Table>,
}

impl From<Vec<CheckRecord>> for SuiteOutput {
    fn from(records: Vec<CheckRecord>) -> Self {
        SuiteOutput { records, table: None }
    }
}

pub const DEFAULT_N_T: usize = 65;
pub const DEFAULT_N_EPS: usize = 33;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_N_T_LIST: [usize; 4] = [33, 65, 129, 257];

/// `{x1, x2} = x3` and cyclic: the linear Poisson structure of so(3)*.
pub fn so3_dual(chart: Chart) -> PoissonBivector {
    let (x1, x2, x3) = (Expr::var(0), Expr::var(1), Expr::var(2));
    PoissonBivector::new(chart, vec![(1, 2, x3), (2, 3, x1), (3, 1, x2)]).expect("so(3)* entries are valid")
}

/// Does `pi` agree with the so(3)* bracket at a few sample points?
pub fn is_so3_dual(pi: &PoissonBivector) -> bool {
    if pi.dim() != 3 {
        return false;
    }
    let reference = so3_dual(pi.chart().clone());
    let mut rng = stream(0, 0);
    (0..8).all(|_| {
        let x = pi.chart().sample(&mut rng);
        match (pi.matrix_at(&x), reference.matrix_at(&x)) {
            (Ok(a), Ok(b)) => (a - b).amax() < 1e-12,
            _ => false,
        }
    })
}

/// Whether `pi` vanishes identically (constant entries equal to zero).
pub fn is_zero_bivector(pi: &PoissonBivector) -> bool {
    pi.is_constant() && (0..pi.dim()).all(|i| (0..pi.dim()).all(|j| pi.entry(i, j).is_zero()))
}

fn is_nondegenerate_constant(pi: &PoissonBivector) -> bool {
    if !pi.is_constant() || pi.dim() == 0 {
        return false;
    }
    let centre: Vec<f64> = pi.chart().lower().iter().zip(pi.chart().upper()).map(|(a, b)| 0.5 * (a + b)).collect();
    pi.matrix_at(&centre)
        .map(|m| m.singular_values().min() > 1e-12 * m.amax().max(1.0))
        .unwrap_or(false)
}

/// `ad(e_i)`, with entry `(k, j)` equal to `c^k_ij`.
pub fn adjoint_representation(c: &StructureConstants) -> Result<MatrixRepresentation> {
    let r = c.len();
    let gens = (0..r).map(|i| DMatrix::from_fn(r, r, |k, j| c[i][j][k])).collect();
    Ok(MatrixRepresentation::new(gens, false)?)
}

fn representation(constants: &StructureConstants, so3: bool) -> Result<MatrixRepresentation> {
    if so3 {
        Ok(MatrixRepresentation::so3())
    } else {
        adjoint_representation(constants)
    }
}

/// The algebroid of a model with an algebroid structure.
pub fn model_algebroid(model: &Model) -> Result<Algebroid> {
    match model {
        Model::Poisson(pi) => Ok(cotangent_algebroid(pi)),
        Model::LieAlgebra { constants, .. } => Ok(lie_algebra_algebroid(constants)?),
        Model::Algebroid(a) => Ok(a.clone()),
        Model::Groupoid(_) => Err(SuiteError::Unsupported("a groupoid model has no algebroid".into())),
    }
}

fn grids(n_t: usize, n_eps: usize) -> Result<(TimeGrid, EpsilonGrid)> {
    Ok((TimeGrid::new(n_t)?, EpsilonGrid::new(n_eps)?))
}

fn centre(chart: &Chart) -> Vec<f64> {
    chart.lower().iter().zip(chart.upper()).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Uniform point in the middle half of the chart.
fn inner_point<R: Rng + ?Sized>(chart: &Chart, rng: &mut R) -> Vec<f64> {
    let c = centre(chart);
    chart.sample(rng).iter().zip(&c).map(|(x, m)| m + 0.5 * (x - m)).collect()
}

fn curve(spec: &CurveSpec, rank: usize, field: &str) -> Result<FlatCurve> {
    if [&spec.c0, &spec.c1, &spec.c2].iter().any(|c| c.len() != rank) {
        return Err(SuiteError::Unsupported(format!("{field}: coefficients must have {rank} entries")));
    }
    Ok(FlatCurve {
        c: [&spec.c0, &spec.c1, &spec.c2].map(|c| DVector::from_column_slice(c)),
    })
}

fn start_point(alg: &Algebroid, given: Option<&Vec<f64>>) -> Result<Vec<f64>> {
    match given {
        Some(x) if x.len() != alg.dim() => {
            Err(SuiteError::Unsupported(format!("x0 must have {} coordinates", alg.dim())))
        }
        Some(x) => Ok(x.clone()),
        None => Ok(centre(alg.chart())),
    }
}

fn a0_path(alg: &Algebroid, x0: &[f64], c: &FlatCurve, grid: TimeGrid) -> Result<A0Path> {
    let p = solve_base_path(alg, x0, c.sample(&grid), grid)?;
    Ok(A0Path::new(alg, p, default_path_tol(&grid))?)
}

/// Axiom checks for whatever structure the model carries.
pub fn check_algebroid(cfg: &RunConfig, exec: Execution) -> Result<Vec<CheckRecord>> {
    let tol = cfg.tol("axiom", 1e-6);
    let sampling = Sampling::new(cfg.samples(DEFAULT_SAMPLES)).with_seed(cfg.seed()).with_exec(exec);
    let mut records = Vec::new();
    let alg = match &cfg.model {
        Model::Groupoid(g) => {
            let defect = g.check_action(sampling.samples, cfg.seed(), tol)?;
            records.push(CheckRecord::below("action-composition", defect, tol));
            return Ok(records);
        }
        Model::Poisson(pi) => {
            records.push(check_poisson_jacobi(pi, sampling, tol).record());
            cotangent_algebroid(pi)
        }
        Model::LieAlgebra { constants, .. } => {
            let residual = constants_jacobiator(constants);
            records.push(CheckRecord::below("structure-constants-jacobi", residual, tol));
            match lie_algebra_algebroid(constants) {
                Ok(a) => a,
                Err(AlgebroidError::JacobiViolation { .. }) => return Ok(records),
                Err(e) => return Err(e.into()),
            }
        }
        Model::Algebroid(a) => a.clone(),
    };
    records.push(check_anchor_homomorphism(&alg, sampling, tol).record());
    records.push(check_section_jacobi(&alg, sampling, tol).record());
    Ok(records)
}

/// Integrate the base path of a flat fiber curve and validate it; the CSV
/// holds `t, x…, a…`.
pub fn integrate_path(cfg: &RunConfig) -> Result<SuiteOutput> {
    let alg = model_algebroid(&cfg.model)?;
    let spec = cfg.raw.path.clone().unwrap_or_default();
    let grid = TimeGrid::new(cfg.n_t(DEFAULT_N_T))?;
    let tol = cfg.tol("path", default_path_tol(&grid));
    let c = path_curve(&alg, &spec, cfg.seed())?;
    let x0 = start_point(&alg, spec.x0.as_ref())?;
    let p = solve_base_path(&alg, &x0, c.sample(&grid), grid)?;
    let r = validate_apath(&alg, &p, tol)?;
    let mut records = vec![
        CheckRecord::below("a-path-residual", r.max_residual, tol),
        CheckRecord::below("a0-boundary", r.boundary, tol),
        CheckRecord::flag("in-chart", r.in_chart),
    ];
    if let Model::Poisson(pi) = &cfg.model {
        if is_zero_bivector(pi) {
            let class = Oracle::ZeroPoisson.class(&alg, &p)?;
            let exact = OracleClass::FiberwiseCotangent {
                base: p.source().clone(),
                covector: c.integral(),
            };
            records.push(CheckRecord::below("zero-poisson-integral", class.distance(&exact), cfg.tol("class", 1e-6)));
        }
    }
    Ok(SuiteOutput {
        records,
        table: Some(path_table(&p)),
    })
}

fn path_curve(alg: &Algebroid, spec: &PathSpec, seed: u64) -> Result<FlatCurve> {
    match &spec.curve {
        Some(c) => curve(c, alg.rank(), "path.curve"),
        None => Ok(FlatCurve::random(&mut stream(seed, 0), alg.rank(), spec.amplitude.unwrap_or(0.5))),
    }
}

fn path_table(p: &APath) -> Table {
    let mut header = vec!["t".to_string()];
    header.extend((1..=p.base_dim()).map(|i| format!("x{i}")));
    header.extend((1..=p.rank()).map(|i| format!("a{i}")));
    let mut t = Table::new(header);
    for (k, tk) in p.grid().nodes().enumerate() {
        let mut row = vec![Some(tk)];
        row.extend(p.base()[k].iter().map(|&v| Some(v)));
        row.extend(p.fiber()[k].iter().map(|&v| Some(v)));
        t.push(row);
    }
    t
}

/// Build the configured family (`family` section) on the given grids.
pub fn configured_family(
    alg: &Algebroid,
    spec: &FamilySpec,
    time: TimeGrid,
    eps: EpsilonGrid,
    seed: u64,
    exec: Execution,
) -> Result<PathFamily> {
    let mut rng = stream(seed, 0);
    let amplitude = spec.amplitude.unwrap_or(0.5);
    let pick = |given: &Option<CurveSpec>, field: &str, rng: &mut _| match given {
        Some(c) => curve(c, alg.rank(), field),
        None => Ok(FlatCurve::random(rng, alg.rank(), amplitude)),
    };
    match spec.kind {
        FamilyKind::Constant => {
            let x0 = start_point(alg, spec.x0.as_ref())?;
            let c = pick(&spec.a0, "family.a0", &mut rng)?;
            let p = solve_base_path(alg, &x0, c.sample(&time), time)?;
            Ok(PathFamily::new(alg, eps, vec![p; eps.len()], default_path_tol(&time))?)
        }
        FamilyKind::Linear => {
            let x0 = start_point(alg, spec.x0.as_ref())?;
            let fam = LinearFamily {
                a0: pick(&spec.a0, "family.a0", &mut rng)?,
                a1: pick(&spec.a1, "family.a1", &mut rng)?,
            };
            Ok(PathFamily::from_fibers(alg, &x0, time, eps, fam.fibers(&time, &eps), exec)?)
        }
        FamilyKind::Rotation => {
            if alg.rank() != 3 || !(alg.dim() == 0 || alg.dim() == 3) {
                return Err(SuiteError::Unsupported("rotation families need so(3) or so(3)*".into()));
            }
            let x0 = match (&spec.x0, alg.dim()) {
                (_, 0) => vec![],
                (Some(x), _) => start_point(alg, Some(x))?,
                (None, _) => vec![0.5, -0.4, 0.6],
            };
            let axis = match (spec.axis, alg.dim()) {
                (Some(a), _) => Vector3::from(a),
                (None, 3) => Vector3::from_column_slice(&x0),
                (None, _) => Vector3::new(0.0, 0.0, 1.0),
            };
            let fam = RotationFamily::random(&mut rng, axis, spec.theta.unwrap_or(0.0), amplitude);
            Ok(fam.family(alg, &x0, time, eps, exec)?)
        }
    }
}

/// Solve the homotopy equation along the configured family and decide
/// homotopy; the CSV holds `eps, end_norm`.
pub fn homotopy(cfg: &RunConfig, exec: Execution) -> Result<SuiteOutput> {
    let mut alg = model_algebroid(&cfg.model)?;
    if let Some(gamma) = &cfg.connection {
        alg = alg.with_connection(gamma.clone())?;
    }
    let spec = cfg.raw.family.clone().unwrap_or_default();
    let (time, eps) = grids(cfg.n_t(DEFAULT_N_T), cfg.n_eps(DEFAULT_N_EPS))?;
    let tol = cfg.tol("homotopy", default_homotopy_tol(&time, &eps));
    let fam = configured_family(&alg, &spec, time, eps, cfg.seed(), exec)?;
    let d = is_homotopic_along_family(&alg, &fam, tol, exec)?;
    let mut records = vec![if spec.expect_homotopic.unwrap_or(true) {
        CheckRecord::below("homotopy-end-value", d.max_end, tol)
    } else {
        CheckRecord::at_least("homotopy-end-value", d.max_end, tol)
    }];
    let slices = check_intermediate_slices(&alg, &fam, &d.field, exec)?;
    records.push(CheckRecord::below("intermediate-slices", slices, tol));
    if alg.has_connection() {
        let flat = solve_homotopy_equation(&alg.without_connection(), &fam, exec)?;
        records.push(CheckRecord::below(
            "connection-independence",
            end_difference(&flat.end_values(), &d.field.end_values()),
            cfg.tol("connection", 1e-4),
        ));
    }
    let mut table = Table::new(["eps", "end_norm"]);
    for (e, v) in eps.nodes().zip(&d.profile) {
        table.push(vec![Some(e), Some(*v)]);
    }
    Ok(SuiteOutput {
        records,
        table: Some(table),
    })
}

fn end_difference(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}

/// Relative defect between `b(ε, 1)` and the log-derivative of the
/// development endpoint for one linear family over a point.
pub fn development_defect(
    alg: &Algebroid,
    rep: &MatrixRepresentation,
    fam: &LinearFamily,
    n_t: usize,
    n_eps: usize,
    exec: Execution,
) -> Result<f64> {
    let (time, eps) = grids(n_t, n_eps)?;
    let family = fam.over_point(alg, time, eps, exec)?;
    let b = solve_homotopy_equation(alg, &family, exec)?.end_values();
    let oracle = log_derivative_oracle(rep, |e, t| fam.eval(e, t), &eps, 4 * (n_t - 1), exec);
    let scale = oracle.iter().map(|v| v.amax()).fold(0.0, f64::max);
    Ok(end_difference(&b, &oracle) / scale)
}

/// Worst [`development_defect`] over `families` random families.
pub fn development_defects(
    alg: &Algebroid,
    rep: &MatrixRepresentation,
    families: usize,
    n_t: usize,
    n_eps: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>> {
    (0..families)
        .map(|i| {
            let fam = LinearFamily::random(&mut stream(seed, i as u64), alg.rank(), 1.0);
            development_defect(alg, rep, &fam, n_t, n_eps, exec)
        })
        .collect()
}

/// Random families with fixed source, used for connection independence.
/// Over so(3) and so(3)* these are rotation families; elsewhere linear
/// families from points in the middle of the chart.
pub fn sample_families(
    alg: &Algebroid,
    rotation: bool,
    count: usize,
    time: TimeGrid,
    eps: EpsilonGrid,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PathFamily>> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            if rotation {
                let x0 = if alg.dim() == 3 {
                    let v = Vector3::from_vec(symmetric_vector(&mut rng, 3, 1.0));
                    (v * (0.8 / v.norm())).as_slice().to_vec()
                } else {
                    vec![]
                };
                let axis = if x0.is_empty() {
                    Vector3::from_vec(symmetric_vector(&mut rng, 3, 1.0))
                } else {
                    Vector3::from_column_slice(&x0)
                };
                let theta = rng.random_range(0.5..1.0);
                Ok(RotationFamily::random(&mut rng, axis, theta, 0.8).family(alg, &x0, time, eps, exec)?)
            } else {
                let x0 = inner_point(alg.chart(), &mut rng);
                let fam = LinearFamily::random(&mut rng, alg.rank(), 0.3);
                Ok(PathFamily::from_fibers(alg, &x0, time, eps, fam.fibers(&time, &eps), exec)?)
            }
        })
        .collect()
}

/// Largest difference of `b(ε, 1)` computed without and with a random
/// polynomial connection, and the largest `|b(ε, 1)|` seen.
pub fn connection_independence(
    alg: &Algebroid,
    families: &[PathFamily],
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for (i, fam) in families.iter().enumerate() {
        let gamma = random_connection(&mut stream(seed ^ 0xc0, i as u64), alg.dim(), alg.rank(), 0.5);
        let curved = alg.clone().with_connection(gamma)?;
        let a = solve_homotopy_equation(alg, fam, exec)?;
        let b = solve_homotopy_equation(&curved, fam, exec)?;
        worst = worst.max(end_difference(&a.end_values(), &b.end_values()));
        size = size.max(a.max_end_norm());
    }
    Ok((worst, size))
}

/// Functoriality and homotopy decisions in the oracle groupoid of the model,
/// or connection independence where no oracle applies.
pub fn oracle_suite(cfg: &RunConfig, exec: Execution) -> Result<Vec<CheckRecord>> {
    let alg = model_algebroid(&cfg.model)?;
    let (time, eps) = grids(cfg.n_t(DEFAULT_N_T), cfg.n_eps(17))?;
    let decision_tol = cfg.tol("homotopy", default_homotopy_tol(&time, &eps));
    let class_tol = cfg.tol("class", 1e-6);
    let seed = cfg.seed();
    match &cfg.model {
        // b(ε, 1) is a quadrature of ∫ ∂_ε a here, so decisions can use the
        // class tolerance
        Model::Poisson(pi) if is_zero_bivector(pi) => zero_poisson_suite(
            &alg,
            cfg.families(100),
            time,
            eps,
            cfg.tol("homotopy", class_tol),
            class_tol,
            seed,
            exec,
        ),
        Model::Poisson(pi) if is_nondegenerate_constant(pi) => {
            pair_groupoid_suite(&alg, cfg.families(20), time, eps, decision_tol, class_tol, seed, exec)
        }
        Model::LieAlgebra { constants, so3 } => {
            let rep = representation(constants, *so3)?;
            let n = cfg.families(10);
            let mut suite = FunctorialitySuite::default();
            for i in 0..n {
                let mut rng = stream(seed, i as u64);
                let (cp, cq) = (FlatCurve::random(&mut rng, alg.rank(), 1.0), FlatCurve::random(&mut rng, alg.rank(), 1.0));
                suite.pairs.push((a0_path(&alg, &[], &cp, time)?, a0_path(&alg, &[], &cq, time)?));
                let fam = if *so3 {
                    let theta = if i % 2 == 0 { 0.0 } else { 0.8 };
                    RotationFamily::random(&mut rng, Vector3::new(1.0, 2.0, -0.5), theta, 1.0)
                        .family(&alg, &[], time, eps, exec)?
                } else {
                    LinearFamily::random(&mut rng, alg.rank(), 1.0).over_point(&alg, time, eps, exec)?
                };
                suite.families.push(fam);
            }
            let oracle = Oracle::Development(rep.clone());
            let mut records =
                check_oracle_functoriality(&oracle, &alg, &suite, decision_tol, class_tol, exec)?.records();
            let defects = development_defects(&alg, &rep, n, time.len(), eps.len(), seed ^ 0xde, exec)?;
            records.push(CheckRecord::below(
                "development/log-derivative",
                defects.into_iter().fold(0.0, f64::max),
                cfg.tol("oracle", 1e-4),
            ));
            Ok(records)
        }
        model => {
            let rotation = matches!(model, Model::Poisson(pi) if is_so3_dual(pi));
            let fams = sample_families(&alg, rotation, cfg.families(5), time, eps, seed, exec)?;
            let (diff, _) = connection_independence(&alg, &fams, seed, exec)?;
            let mut slices: f64 = 0.0;
            for fam in &fams {
                let field = solve_homotopy_equation(&alg, fam, exec)?;
                slices = slices.max(check_intermediate_slices(&alg, fam, &field, exec)?);
            }
            Ok(vec![
                CheckRecord::below("connection-independence", diff, cfg.tol("connection", 1e-4)),
                CheckRecord::below("intermediate-slices", slices, decision_tol),
            ])
        }
    }
}

/// Random pairs over the zero bivector, half of them with equal integrals.
/// Besides the functoriality records, the homotopy decision of each linear
/// family is compared with equality of the exact integrals.
#[allow(clippy::too_many_arguments)]
pub fn zero_poisson_suite(
    alg: &Algebroid,
    pairs: usize,
    time: TimeGrid,
    eps: EpsilonGrid,
    decision_tol: f64,
    class_tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CheckRecord>> {
    let mut suite = FunctorialitySuite::default();
    let mut expected = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let mut rng = stream(seed, i as u64);
        let x0 = inner_point(alg.chart(), &mut rng);
        let p = FlatCurve::random(&mut rng, alg.rank(), 1.0);
        let q = if i % 2 == 0 {
            p.with_same_integral(&mut rng, 1.0)
        } else {
            FlatCurve::random(&mut rng, alg.rank(), 1.0)
        };
        expected.push((p.integral() - q.integral()).amax() < class_tol);
        let fam = LinearFamily { a0: p.clone(), a1: q.clone() };
        suite.families.push(PathFamily::from_fibers(alg, &x0, time, eps, fam.fibers(&time, &eps), exec)?);
        suite.pairs.push((a0_path(alg, &x0, &p, time)?, a0_path(alg, &x0, &q, time)?));
    }
    let mut records = check_oracle_functoriality(&Oracle::ZeroPoisson, alg, &suite, decision_tol, class_tol, exec)?.records();
    let decisions = exec.try_map_range(pairs, |i| {
        is_homotopic_along_family(alg, &suite.families[i], decision_tol, Execution::Sequential).map(|d| d.homotopic)
    })?;
    let disagreements = decisions.iter().zip(&expected).filter(|(d, e)| d != e).count();
    records.push(CheckRecord::below("zero-poisson/decision-vs-integral", disagreements as f64, 0.5));
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn pair_groupoid_suite(
    alg: &Algebroid,
    pairs: usize,
    time: TimeGrid,
    eps: EpsilonGrid,
    decision_tol: f64,
    class_tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CheckRecord>> {
    let mut suite = FunctorialitySuite::default();
    for i in 0..pairs {
        let mut rng = stream(seed, i as u64);
        let x0 = inner_point(alg.chart(), &mut rng);
        let cq = FlatCurve::random(&mut rng, alg.rank(), 0.5);
        let q = a0_path(alg, &x0, &cq, time)?;
        let p = a0_path(alg, q.target().as_slice(), &FlatCurve::random(&mut rng, alg.rank(), 0.5), time)?;
        let other = if i % 2 == 0 {
            cq.with_same_integral(&mut rng, 0.5)
        } else {
            FlatCurve::random(&mut rng, alg.rank(), 0.5)
        };
        let fam = LinearFamily { a0: cq, a1: other };
        // families whose target moves are not homotopies and are skipped
        match PathFamily::from_fibers(alg, &x0, time, eps, fam.fibers(&time, &eps), exec) {
            Ok(f) if f.target_drift() < default_path_tol(&time) => suite.families.push(f),
            Ok(_) => {}
            Err(e) => return Err(e.into()),
        }
        suite.pairs.push((p, q));
    }
    Ok(check_oracle_functoriality(&Oracle::SymplecticChart, alg, &suite, decision_tol, class_tol, exec)?.records())
}

/// Random polynomial of degree ≤ 2 in `n` variables.
pub fn random_quadratic<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Expr {
    let mut c = || Expr::num(rng.random_range(-1.0..1.0));
    let mut terms = vec![c()];
    for i in 0..n {
        terms.push(c() * Expr::var(i));
        for j in i..n {
            terms.push(c() * Expr::var(i) * Expr::var(j));
        }
    }
    Expr::sum(terms)
}

/// Multiplicativity, the reduced bracket through the oracle groupoids and
/// kernel containment of homotopy directions.
pub fn symplectic_suite(cfg: &RunConfig, exec: Execution) -> Result<Vec<CheckRecord>> {
    let Model::Poisson(pi) = &cfg.model else {
        return Err(SuiteError::Unsupported("symplectic-suite needs a poisson model".into()));
    };
    let alg = cotangent_algebroid(pi);
    let seed = cfg.seed();
    let (time, eps) = grids(cfg.n_t(DEFAULT_N_T), cfg.n_eps(DEFAULT_N_EPS))?;
    let mut records = multiplicativity(&alg, time, cfg.trials(100), cfg.tol("multiplicativity", 1e-12), seed, exec)?;
    let zero = is_zero_bivector(pi);
    if zero || is_nondegenerate_constant(pi) {
        let oracle = if zero { BracketOracle::ZeroPoisson } else { BracketOracle::SymplecticChart };
        let worst = reduced_bracket(pi, oracle, 10, cfg.samples(50), seed)?;
        records.push(if zero {
            CheckRecord::below("reduced-bracket/zero-poisson", worst, f64::MIN_POSITIVE)
        } else {
            CheckRecord::below("reduced-bracket/pair-groupoid", worst, cfg.tol("bracket", 1e-12))
        });
    }
    let probes = cfg.probes(50);
    let families = cfg.families(3);
    let kernel = if zero || is_nondegenerate_constant(pi) {
        let fams = matched_linear_families(&alg, families, time, eps, seed, exec)?;
        let default = if zero { 1e-10 } else { default_kernel_tol(&fams[0]) };
        Some((fams, default))
    } else if is_so3_dual(pi) {
        let x0 = Vector3::new(0.5, -0.4, 0.6);
        let fams = (0..families)
            .map(|i| {
                let fam = RotationFamily::random(&mut stream(seed, i as u64), x0, 0.0, 1.0);
                Ok(fam.family(&alg, x0.as_slice(), time, eps, exec)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let default = default_kernel_tol(&fams[0]);
        Some((fams, default))
    } else {
        None
    };
    if let Some((fams, default)) = kernel {
        if let Some(worst) = kernel_pairing(&alg, &fams, probes, seed, exec)? {
            records.push(CheckRecord::below("kernel-containment", worst, cfg.tol("kernel", default)));
        }
    }
    Ok(records)
}

/// Split and straddle defects of the form under concatenation of two
/// random A0-paths.
pub fn multiplicativity(
    alg: &Algebroid,
    time: TimeGrid,
    trials: usize,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CheckRecord>> {
    let mut rng = stream(seed, 0);
    let x0 = inner_point(alg.chart(), &mut rng);
    let q = a0_path(alg, &x0, &FlatCurve::random(&mut rng, alg.rank(), 0.5), time)?;
    let p = a0_path(alg, q.target().as_slice(), &FlatCurve::random(&mut rng, alg.rank(), 0.5), time)?;
    Ok(check_multiplicativity(alg, &p, &q, trials, seed, exec)?.records(tol))
}

/// Worst reduced-bracket defect over `pairs` random quadratic pairs.
pub fn reduced_bracket(pi: &PoissonBivector, oracle: BracketOracle, pairs: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let mut rng = stream(seed ^ 0xb7, i as u64);
        let (f, g) = (random_quadratic(&mut rng, pi.dim()), random_quadratic(&mut rng, pi.dim()));
        worst = worst.max(oracle_reduced_bracket(oracle, pi, &f, &g, samples, seed.wrapping_add(i as u64))?.max_defect);
    }
    Ok(worst)
}

/// Linear families between curves with equal trapezoid sums, which are
/// homotopies over a constant bivector.
pub fn matched_linear_families(
    alg: &Algebroid,
    count: usize,
    time: TimeGrid,
    eps: EpsilonGrid,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PathFamily>> {
    (0..count)
        .map(|i| {
            let mut rng = stream(seed ^ 0x4e, i as u64);
            let a0 = FlatCurve::random(&mut rng, alg.rank(), 0.5);
            let a1 = a0.with_same_trapezoid_sum(&mut rng, 0.5, &time);
            let fam = LinearFamily { a0, a1 };
            let x0 = inner_point(alg.chart(), &mut rng);
            Ok(PathFamily::from_fibers(alg, &x0, time, eps, fam.fibers(&time, &eps), exec)?)
        })
        .collect()
}

/// Worst pairing over all families, `None` for an empty list.
pub fn kernel_pairing(
    alg: &Algebroid,
    families: &[PathFamily],
    probes: usize,
    seed: u64,
    exec: Execution,
) -> Result<Option<f64>> {
    let mut worst: Option<f64> = None;
    for (i, fam) in families.iter().enumerate() {
        let r = check_kernel_containment(alg, fam, probes, f64::INFINITY, seed.wrapping_add(i as u64), exec)?;
        worst = Some(worst.map_or(r.max_pairing, |w| w.max(r.max_pairing)));
    }
    Ok(worst)
}

/// Group average `|G|⁻¹ Σ f ∘ φ_g`, an invariant function.
pub fn average(g: &FiniteActionGroupoid, f: &Expr) -> Result<Expr> {
    let mut terms = Vec::with_capacity(g.order());
    for h in 0..g.order() {
        terms.push(f.compose(g.action(h)).map_err(EtaleError::from)?);
    }
    Ok(Expr::num(1.0 / g.order() as f64) * Expr::sum(terms))
}

/// Invariance, Jacobi and refinement checks for the bracket induced by an
/// invariant 2-form on averaged random quadratics.
pub fn etale_suite(cfg: &RunConfig, exec: Execution) -> Result<Vec<CheckRecord>> {
    let Model::Groupoid(g) = &cfg.model else {
        return Err(SuiteError::Unsupported("etale-suite needs a groupoid model".into()));
    };
    let w = match &cfg.form {
        Some(w) => w.clone(),
        None => CoordForm::darboux(g.dim(), Expr::one())?,
    };
    etale_checks(g, &w, cfg.families(10), cfg.seed(), exec, |name, default| cfg.tol(name, default))
}

pub fn etale_checks(
    g: &FiniteActionGroupoid,
    w: &CoordForm,
    triples: usize,
    seed: u64,
    exec: Execution,
    tol: impl Fn(&str, f64) -> f64,
) -> Result<Vec<CheckRecord>> {
    let inv_tol = tol("invariance", 1e-9);
    let mut records = vec![
        check_invariance(g, w, inv_tol, seed)?.record("form-invariance"),
        check_arrow_invariance(g, w, inv_tol, seed)?.record("arrow-invariance"),
    ];
    let mut invariance: f64 = 0.0;
    let mut jacobi: f64 = 0.0;
    let mut first = None;
    for i in 0..triples {
        let mut rng = stream(seed ^ 0xe7, i as u64);
        let [f, h, k] = [0; 3].map(|_| random_quadratic(&mut rng, g.dim()));
        let (f, h, k) = (average(g, &f)?, average(g, &h)?, average(g, &k)?);
        let b = invariant_poisson_bracket(g, w, &f, &h, seed)?;
        invariance = invariance.max(function_invariance_defect(g, &b, seed)?.1);
        jacobi = jacobi.max(bracket_jacobiator(g, w, [&f, &h, &k], seed)?);
        first.get_or_insert((f, h));
    }
    records.push(CheckRecord::below("bracket-invariance", invariance, inv_tol));
    records.push(CheckRecord::below("bracket-jacobi", jacobi, tol("jacobi", 1e-6)));
    if let Some((f, h)) = first {
        for copies in [2, 3] {
            let refined = refine_atlas(g, copies)?;
            let r = check_presentation_independence(g, &refined, w, &f, &h, tol("presentation", 1e-12), seed, exec)?;
            records.push(r.record(&format!("presentation/copies-{copies}")));
        }
    }
    Ok(records)
}

/// Defects of the development comparison over `n_t_list` at fixed `n_eps`.
/// Each halving of `h` must shrink the defect by at least 8 until the
/// ε-difference floor; the CSV is `n_t,defect,order`.
///
/// Unless `numerics.floor` is set, the floor is estimated as the change of
/// the finest defect when `n_eps` is doubled, and pairs whose finer defect
/// is within a factor 8 of it are skipped.
pub fn convergence(cfg: &RunConfig, exec: Execution) -> Result<SuiteOutput> {
    let Model::LieAlgebra { constants, so3 } = &cfg.model else {
        return Err(SuiteError::Unsupported("convergence needs a lie_algebra model".into()));
    };
    let alg = lie_algebra_algebroid(constants)?;
    let rep = representation(constants, *so3)?;
    let list = cfg.raw.numerics.n_t_list.clone().unwrap_or(DEFAULT_N_T_LIST.to_vec());
    if list.len() < 2 {
        return Err(SuiteError::Unsupported("numerics.n_t_list needs at least two grids".into()));
    }
    let n_eps = cfg.n_eps(129);
    let fam = LinearFamily::random(&mut stream(cfg.seed(), 0), alg.rank(), 1.0);
    let defects = list
        .iter()
        .map(|&n| Ok((n, development_defect(&alg, &rep, &fam, n, n_eps, exec)?)))
        .collect::<Result<Vec<_>>>()?;
    let (finest, d_finest) = defects[defects.len() - 1];
    let floor = match cfg.raw.numerics.floor {
        Some(f) => f,
        None => 8.0 * (development_defect(&alg, &rep, &fam, finest, 2 * n_eps - 1, exec)? - d_finest).abs(),
    };
    let rows = convergence_rows(&defects);
    let mut records = Vec::new();
    for (prev, row) in defects.iter().zip(&rows[1..]) {
        if row.defect < floor {
            break;
        }
        records.push(CheckRecord::at_least(
            format!("convergence/ratio-{}-{}", prev.0, row.n_t),
            prev.1 / row.defect,
            8.0,
        ));
    }
    if records.is_empty() {
        records.push(CheckRecord::at_least("convergence/pairs-above-floor", 0.0, 1.0));
    }
    Ok(SuiteOutput {
        records,
        table: Some(convergence_table(&rows)),
    })
}
