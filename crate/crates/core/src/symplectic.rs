//! The canonical symplectic form on discretized cotangent path space.
//!
//! A tangent vector to the path space at an A-path is a pair of node
//! arrays `(δγ_k, δa_k)`. The form is the trapezoid discretization of
//! `∫ ⟨δ¹a, δ²γ⟩ − ⟨δ²a, δ¹γ⟩ dt`.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::algebroid::{Algebroid, AlgebroidError, PoissonBivector};
use crate::exec::Execution;
use crate::expr::{ComposeError, EvalError, Expr};
use crate::path::numerics::{inf_norm, interpolate};
use crate::path::{
    concatenate, default_homotopy_tol, solve_homotopy_equation, A0Path, APath, PathError,
    PathFamily, TimeGrid,
};
use crate::report::CheckRecord;
use crate::sampling::{stream, symmetric_vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymplecticError {
    #[error("variations live on different grids")]
    GridMismatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("family is not a homotopy: max |b(ε,1)| = {max_end:e} exceeds {tol:e}")]
    NotAHomotopy { max_end: f64, tol: f64 },
    #[error("unsupported oracle: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

pub type Result<T> = std::result::Result<T, SymplecticError>;

/// Base and fiber variations at every node of a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathVariation {
    grid: TimeGrid,
    pub dgamma: Vec<DVector<f64>>,
    pub da: Vec<DVector<f64>>,
}

impl PathVariation {
    pub fn new(grid: TimeGrid, dgamma: Vec<DVector<f64>>, da: Vec<DVector<f64>>) -> Result<Self> {
        if dgamma.len() != grid.len() || da.len() != grid.len() {
            return Err(SymplecticError::Shape(format!(
                "variation needs {} nodes, got {} and {}",
                grid.len(),
                dgamma.len(),
                da.len()
            )));
        }
        let n = dgamma[0].len();
        if dgamma.iter().chain(&da).any(|v| v.len() != n) {
            return Err(SymplecticError::Shape(
                "base and fiber variations must share one dimension".into(),
            ));
        }
        Ok(PathVariation { grid, dgamma, da })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        PathVariation {
            grid,
            dgamma: vec![DVector::zeros(dim); grid.len()],
            da: vec![DVector::zeros(dim); grid.len()],
        }
    }

    /// Unit fiber variation in component `i` at node `k`.
    pub fn unit_fiber(grid: TimeGrid, dim: usize, k: usize, i: usize) -> Self {
        let mut v = PathVariation::zero(grid, dim);
        v.da[k][i] = 1.0;
        v
    }

    /// Unit base variation in component `i` at node `k`.
    pub fn unit_base(grid: TimeGrid, dim: usize, k: usize, i: usize) -> Self {
        let mut v = PathVariation::zero(grid, dim);
        v.dgamma[k][i] = 1.0;
        v
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, grid: TimeGrid, dim: usize) -> Self {
        let mut draw = || DVector::from_vec(symmetric_vector(rng, dim, 1.0));
        let dgamma = (0..grid.len()).map(|_| draw()).collect();
        let da = (0..grid.len()).map(|_| draw()).collect();
        PathVariation { grid, dgamma, da }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dgamma[0].len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        PathVariation {
            grid: self.grid,
            dgamma: self.dgamma.iter().map(|v| v * s).collect(),
            da: self.da.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &PathVariation) -> Result<Self> {
        if self.grid != other.grid {
            return Err(SymplecticError::GridMismatch);
        }
        Ok(PathVariation {
            grid: self.grid,
            dgamma: self.dgamma.iter().zip(&other.dgamma).map(|(a, b)| a + b).collect(),
            da: self.da.iter().zip(&other.da).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Trapezoid quadrature weights of the path-space form.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpaceForm {
    grid: TimeGrid,
    pub weights: Vec<f64>,
}

impl PathSpaceForm {
    pub fn trapezoid(grid: TimeGrid) -> Self {
        PathSpaceForm {
            grid,
            weights: grid.trapezoid_weights(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

/// `Σ_k w_k (⟨δ¹a_k, δ²γ_k⟩ − ⟨δ²a_k, δ¹γ_k⟩)`.
pub fn eval_path_form(form: &PathSpaceForm, d1: &PathVariation, d2: &PathVariation) -> Result<f64> {
    if d1.grid != form.grid || d2.grid != form.grid {
        return Err(SymplecticError::GridMismatch);
    }
    if d1.dim() != d2.dim() {
        return Err(SymplecticError::Shape("variations of different dimension".into()));
    }
    Ok(form
        .weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * (d1.da[k].dot(&d2.dgamma[k]) - d2.da[k].dot(&d1.dgamma[k])))
        .sum())
}

/// Variation of `concatenate(p, q)` assembled from a variation of `q`
/// (first half) and of `p` (second half). Fiber variations are doubled
/// with the fiber; the junction node takes the mean of the two pieces.
pub fn concatenate_variation(dp: &PathVariation, dq: &PathVariation) -> Result<PathVariation> {
    if dp.grid != dq.grid {
        return Err(SymplecticError::GridMismatch);
    }
    let n = dp.grid.len();
    let mut dgamma = Vec::with_capacity(2 * n - 1);
    let mut da = Vec::with_capacity(2 * n - 1);
    for k in 0..n - 1 {
        dgamma.push(dq.dgamma[k].clone());
        da.push(&dq.da[k] * 2.0);
    }
    dgamma.push((&dq.dgamma[n - 1] + &dp.dgamma[0]) * 0.5);
    da.push(&dq.da[n - 1] + &dp.da[0]);
    for k in 1..n {
        dgamma.push(dp.dgamma[k].clone());
        da.push(&dp.da[k] * 2.0);
    }
    PathVariation::new(dp.grid.refined(), dgamma, da)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicativityReport {
    pub trials: usize,
    /// Worst `|ω_pq(δ¹, δ²) − ω_q(δ¹_q, δ²_q) − ω_p(δ¹_p, δ²_p)|` over
    /// variations vanishing at the junction.
    pub split_defect: f64,
    /// Worst defect over variations with independent junction values.
    pub straddle_defect: f64,
    /// `4 h n A Γ`, with `A` and `Γ` the largest junction fiber and base
    /// variation entries; bounds the straddle defect.
    pub straddle_bound: f64,
}

impl MultiplicativityReport {
    pub fn records(&self, tol: f64) -> Vec<CheckRecord> {
        vec![
            CheckRecord::below("multiplicativity/split", self.split_defect, tol),
            CheckRecord::below(
                "multiplicativity/straddle-within-junction-bound",
                self.straddle_defect,
                self.straddle_bound,
            ),
        ]
    }
}

/// Compare the form on `concatenate(p, q)` with the sum of the forms on
/// `q` and `p` for `trials` random variation pairs of each kind.
pub fn check_multiplicativity(
    alg: &Algebroid,
    p: &A0Path,
    q: &A0Path,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<MultiplicativityReport> {
    if alg.rank() != alg.dim() {
        return Err(SymplecticError::Shape("path-space form needs a cotangent algebroid".into()));
    }
    let grid = *p.grid();
    let tol = crate::path::default_path_tol(&grid);
    let pq = concatenate(alg, p, q, tol)?;
    let (form, fine) = (PathSpaceForm::trapezoid(grid), PathSpaceForm::trapezoid(*pq.grid()));
    let (n, dim) = (grid.len(), alg.dim());
    let results = exec.try_map_range(trials, |t| {
        let mut rng = stream(seed, t as u64);
        let mut v: Vec<PathVariation> =
            (0..4).map(|_| PathVariation::random(&mut rng, grid, dim)).collect();
        let defect = |v: &[PathVariation]| -> Result<f64> {
            let (d1, d2) = (concatenate_variation(&v[0], &v[1])?, concatenate_variation(&v[2], &v[3])?);
            let whole = eval_path_form(&fine, &d1, &d2)?;
            let parts = eval_path_form(&form, &v[1], &v[3])? + eval_path_form(&form, &v[0], &v[2])?;
            Ok((whole - parts).abs())
        };
        let straddle = defect(&v)?;
        let mut a_max: f64 = 0.0;
        let mut g_max: f64 = 0.0;
        for (i, w) in v.iter().enumerate() {
            let k = if i % 2 == 0 { 0 } else { n - 1 };
            a_max = a_max.max(inf_norm(&w.da[k]));
            g_max = g_max.max(inf_norm(&w.dgamma[k]));
        }
        let bound = 4.0 * grid.step() * dim as f64 * a_max * g_max;
        for (i, w) in v.iter_mut().enumerate() {
            let k = if i % 2 == 0 { 0 } else { n - 1 };
            w.da[k].fill(0.0);
            w.dgamma[k].fill(0.0);
        }
        Ok::<_, SymplecticError>((defect(&v)?, straddle, bound))
    })?;
    Ok(MultiplicativityReport {
        trials,
        split_defect: results.iter().map(|r| r.0).fold(0.0, f64::max),
        straddle_defect: results.iter().map(|r| r.1).fold(0.0, f64::max),
        straddle_bound: results.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}

/// Tangent to the A-path constraint at `p`: integrates the linearized base
/// equation `δγ' = Dρ(γ)[δγ] a + ρ(γ) δa` by RK4 from `δγ(0)`.
pub fn constraint_tangent(
    alg: &Algebroid,
    p: &APath,
    dgamma0: DVector<f64>,
    da: Vec<DVector<f64>>,
) -> Result<PathVariation> {
    let (n, r) = (alg.dim(), alg.rank());
    if p.base_dim() != n || p.rank() != r || dgamma0.len() != n || da.len() != p.grid().len() {
        return Err(SymplecticError::Shape("probe does not match the path".into()));
    }
    let partials = alg.anchor_partials();
    let grid = *p.grid();
    let h = grid.step();
    let jet = |x: &DVector<f64>| -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let rho = alg.anchor_at(x.as_slice())?;
        let mut d = Vec::with_capacity(n);
        for l in 0..n {
            let mut m = DMatrix::zeros(n, r);
            for j in 0..n {
                for i in 0..r {
                    m[(j, i)] = partials[(l * n + j) * r + i].eval(x.as_slice())?;
                }
            }
            d.push(m);
        }
        Ok((rho, d))
    };
    let velocity = |(rho, d): &(DMatrix<f64>, Vec<DMatrix<f64>>), a: &DVector<f64>, dav: &DVector<f64>, v: &DVector<f64>| {
        let mut out = rho * dav;
        for (l, m) in d.iter().enumerate() {
            if v[l] != 0.0 {
                out += m * a * v[l];
            }
        }
        out
    };
    let mut dgamma = Vec::with_capacity(grid.len());
    dgamma.push(dgamma0);
    let mut here = jet(&p.base()[0])?;
    for k in 0..grid.len() - 1 {
        let tm = grid.node(k) + 0.5 * h;
        let mid = jet(&interpolate(p.base(), h, tm))?;
        let next = jet(&p.base()[k + 1])?;
        let (am, dam) = (interpolate(p.fiber(), h, tm), interpolate(&da, h, tm));
        let v = &dgamma[k];
        let k1 = velocity(&here, &p.fiber()[k], &da[k], v);
        let k2 = velocity(&mid, &am, &dam, &(v + &k1 * (0.5 * h)));
        let k3 = velocity(&mid, &am, &dam, &(v + &k2 * (0.5 * h)));
        let k4 = velocity(&next, &p.fiber()[k + 1], &da[k + 1], &(v + &k3 * h));
        dgamma.push(v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
        here = next;
    }
    PathVariation::new(grid, dgamma, da)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelReport {
    pub probes: usize,
    pub max_pairing: f64,
    pub tol: f64,
    pub pass: bool,
}

impl KernelReport {
    pub fn record(&self, name: &str) -> CheckRecord {
        CheckRecord::below(name, self.max_pairing, self.tol)
    }
}

/// `100 (h² + h_ε²)`.
pub fn default_kernel_tol(fam: &PathFamily) -> f64 {
    100.0 * (fam.time().step().powi(2) + fam.eps().step().powi(2))
}

/// Pair the homotopy direction `(∂_ε γ, ∂_ε a)` at ε = 0 with `probes`
/// random constraint tangents (smooth random `δa`, random `δγ(0)`).
pub fn check_kernel_containment(
    alg: &Algebroid,
    fam: &PathFamily,
    probes: usize,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<KernelReport> {
    if alg.rank() != alg.dim() {
        return Err(SymplecticError::Shape("path-space form needs a cotangent algebroid".into()));
    }
    let field = solve_homotopy_equation(alg, fam, exec)?;
    let homotopy_tol = default_homotopy_tol(fam.time(), fam.eps());
    let max_end = field.max_end_norm();
    if !(max_end < homotopy_tol) {
        return Err(SymplecticError::NotAHomotopy {
            max_end,
            tol: homotopy_tol,
        });
    }
    let (da, dg) = fam.eps_derivatives(exec);
    let time = *fam.time();
    let direction = PathVariation::new(time, dg[0].clone(), da[0].clone())?;
    let form = PathSpaceForm::trapezoid(time);
    let dim = alg.dim();
    let pairings = exec.try_map_range(probes, |i| {
        let mut rng = stream(seed, i as u64);
        let c: Vec<DVector<f64>> = (0..3)
            .map(|_| DVector::from_vec(symmetric_vector(&mut rng, dim, 1.0)))
            .collect();
        let dav = time
            .nodes()
            .map(|t| &c[0] + &c[1] * (std::f64::consts::PI * t).cos() + &c[2] * (std::f64::consts::PI * t).sin())
            .collect();
        let dg0 = DVector::from_vec(symmetric_vector(&mut rng, dim, 1.0));
        let probe = constraint_tangent(alg, fam.first(), dg0, dav)?;
        Ok::<_, SymplecticError>(eval_path_form(&form, &direction, &probe)?.abs())
    })?;
    let max_pairing = pairings.into_iter().fold(0.0, f64::max);
    Ok(KernelReport {
        probes,
        max_pairing,
        tol,
        pass: max_pairing < tol,
    })
}

/// Dense matrix `M_uv = ω(e_u, e_v)` over the unconstrained path space,
/// basis ordered as all `δγ` entries (node-major) followed by all `δa`.
pub fn pairing_matrix(form: &PathSpaceForm, dim: usize) -> DMatrix<f64> {
    let n = form.weights.len() * dim;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, w) in form.weights.iter().enumerate() {
        for i in 0..dim {
            let g = k * dim + i;
            let a = n + g;
            m[(a, g)] = *w;
            m[(g, a)] = -*w;
        }
    }
    m
}

/// Smallest singular value of [`pairing_matrix`].
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Write a matrix as CSV with a `c0,c1,...` header row.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Oracle groupoids with an explicit symplectic form and source map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketOracle {
    /// `T*M` with `ω = Σ dξ_i ∧ dx_i` and `s(x, ξ) = x`.
    ZeroPoisson,
    /// `M × M` with `ω_M ⊕ (−ω_M)` and `s(x, y) = x`.
    SymplecticChart,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketReport {
    pub samples: usize,
    pub max_defect: f64,
}

/// Poisson bivector `Π = −Ω⁻¹` of a symplectic matrix, so that
/// `dx1 ∧ dx2` gives `{x1, x2} = 1`.
pub fn bivector_of(omega: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    omega.clone().try_inverse().map(|inv| -inv)
}

/// Symplectic matrix `Ω = −Π⁻¹` of an invertible bivector matrix.
pub fn symplectic_of(pi: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    pi.clone().try_inverse().map(|inv| -inv)
}

fn gradient(f: &Expr, x: &[f64]) -> std::result::Result<DVector<f64>, EvalError> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        g[i] = f.diff(i).eval(x)?;
    }
    Ok(g)
}

/// Compare `{f∘s, g∘s}` on the oracle groupoid with `{f, g}_π ∘ s` at
/// `samples` random arrows.
pub fn oracle_reduced_bracket(
    oracle: BracketOracle,
    pi: &PoissonBivector,
    f: &Expr,
    g: &Expr,
    samples: usize,
    seed: u64,
) -> Result<BracketReport> {
    let n = pi.dim();
    let chart = pi.chart();
    let pi_at_centre = pi.matrix_at(&chart.sample(&mut stream(seed, u64::MAX - 1)))?;
    let omega_g = match oracle {
        BracketOracle::ZeroPoisson => {
            if !pi.is_constant() || pi_at_centre.amax() != 0.0 {
                return Err(SymplecticError::Unsupported(
                    "cotangent oracle needs the zero bivector".into(),
                ));
            }
            let mut w = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                w[(n + i, i)] = 1.0;
                w[(i, n + i)] = -1.0;
            }
            w
        }
        BracketOracle::SymplecticChart => {
            if !pi.is_constant() {
                return Err(SymplecticError::Unsupported(
                    "pair groupoid oracle needs a constant bivector".into(),
                ));
            }
            let w = symplectic_of(&pi_at_centre).ok_or_else(|| {
                SymplecticError::Unsupported("bivector is degenerate".into())
            })?;
            let mut wg = DMatrix::zeros(2 * n, 2 * n);
            wg.view_mut((0, 0), (n, n)).copy_from(&w);
            wg.view_mut((n, n), (n, n)).copy_from(&(-w));
            wg
        }
    };
    let pi_g = bivector_of(&omega_g)
        .ok_or_else(|| SymplecticError::Unsupported("groupoid form is degenerate".into()))?;
    // f∘s and g∘s as functions of the 2n groupoid coordinates.
    let source: Vec<Expr> = (0..n).map(Expr::var).collect();
    let (fs, gs) = (f.compose(&source)?, g.compose(&source)?);
    let mut rng = stream(seed, 0);
    let mut max_defect: f64 = 0.0;
    for _ in 0..samples {
        let x = chart.sample(&mut rng);
        let mut z = x.clone();
        match oracle {
            BracketOracle::ZeroPoisson => z.extend(symmetric_vector(&mut rng, n, 1.0)),
            BracketOracle::SymplecticChart => z.extend(chart.sample(&mut rng)),
        }
        let upstairs = gradient(&fs, &z)?.dot(&(&pi_g * gradient(&gs, &z)?));
        let downstairs = pi.bracket(f, g).eval(&x)?;
        max_defect = max_defect.max((upstairs - downstairs).abs());
    }
    Ok(BracketReport {
        samples,
        max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{cotangent_algebroid, Chart};
    use crate::expr::parse_expr;
    use crate::path::{solve_base_path, EpsilonGrid};
    use crate::sampling::rng_from_seed;

    #[test]
    fn single_surviving_term() {
        let grid = TimeGrid::new(9).unwrap();
        let form = PathSpaceForm::trapezoid(grid);
        assert!((form.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in [0, 4, 8] {
            let d1 = PathVariation::unit_fiber(grid, 2, k, 1);
            let d2 = PathVariation::unit_base(grid, 2, k, 1);
            assert_eq!(eval_path_form(&form, &d1, &d2).unwrap(), form.weights[k]);
        }
        let d = PathVariation::random(&mut rng_from_seed(1), grid, 2);
        assert_eq!(eval_path_form(&form, &d, &d).unwrap(), 0.0);
        let a = PathVariation::unit_fiber(grid, 2, 2, 0);
        let b = PathVariation::unit_base(grid, 2, 3, 0);
        assert_eq!(eval_path_form(&form, &a, &b).unwrap(), 0.0);
        let other = PathVariation::zero(TimeGrid::new(5).unwrap(), 2);
        assert_eq!(eval_path_form(&form, &a, &other), Err(SymplecticError::GridMismatch));
    }

    #[test]
    fn nondegenerate_on_small_grids() {
        for n in [3, 9, 33] {
            let form = PathSpaceForm::trapezoid(TimeGrid::new(n).unwrap());
            let m = pairing_matrix(&form, 2);
            assert!((&m + m.transpose()).amax() == 0.0);
            assert!(smallest_singular_value(&m) > 1e-10);
        }
        let mut buf = Vec::new();
        write_matrix_csv(&pairing_matrix(&PathSpaceForm::trapezoid(TimeGrid::new(3).unwrap()), 1), &mut buf)
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("c0,c1,"));
    }

    #[test]
    fn bracket_oracles() {
        let e = |s| parse_expr(s, 2).unwrap();
        let plane = PoissonBivector::new(Chart::cube(2, 1.0), vec![(1, 2, e("1"))]).unwrap();
        let r = oracle_reduced_bracket(BracketOracle::SymplecticChart, &plane, &e("x1"), &e("x2"), 20, 1).unwrap();
        assert!(r.max_defect < 1e-12);
        let r = oracle_reduced_bracket(BracketOracle::SymplecticChart, &plane, &e("x1^2"), &e("x1^2"), 20, 1).unwrap();
        assert_eq!(r.max_defect, 0.0);
        let zero = PoissonBivector::zero(Chart::cube(2, 1.0));
        let r = oracle_reduced_bracket(BracketOracle::ZeroPoisson, &zero, &e("sin(x1)"), &e("x1*x2"), 20, 1).unwrap();
        assert_eq!(r.max_defect, 0.0);
        assert!(oracle_reduced_bracket(BracketOracle::ZeroPoisson, &plane, &e("x1"), &e("x2"), 1, 1).is_err());
    }

    #[test]
    fn linearized_solver_matches_finite_differences() {
        let e = |s| parse_expr(s, 3).unwrap();
        let pi = PoissonBivector::new(
            Chart::cube(3, 2.0),
            vec![(1, 2, e("x3")), (2, 3, e("x1")), (3, 1, e("x2"))],
        )
        .unwrap();
        let alg = cotangent_algebroid(&pi);
        let grid = TimeGrid::new(65).unwrap();
        let a: Vec<DVector<f64>> = grid
            .nodes()
            .map(|t| DVector::from_vec(vec![1.0 + t, -0.5, (2.0 * t).sin()]))
            .collect();
        let da: Vec<DVector<f64>> = grid
            .nodes()
            .map(|t| DVector::from_vec(vec![t.cos(), 0.3, -t]))
            .collect();
        let x0 = [0.4, -0.2, 0.7];
        let dx0 = DVector::from_vec(vec![0.1, 0.5, -0.3]);
        let tangent = constraint_tangent(&alg, &solve_base_path(&alg, &x0, a.clone(), grid).unwrap(), dx0.clone(), da.clone())
            .unwrap();
        let s = 1e-6;
        let moved = |sign: f64| {
            let x: Vec<f64> = x0.iter().zip(dx0.iter()).map(|(x, d)| x + sign * s * d).collect();
            let f = a.iter().zip(&da).map(|(u, v)| u + v * (sign * s)).collect();
            solve_base_path(&alg, &x, f, grid).unwrap()
        };
        let (plus, minus) = (moved(1.0), moved(-1.0));
        for k in 0..grid.len() {
            let fd = (&plus.base()[k] - &minus.base()[k]) / (2.0 * s);
            assert!((fd - &tangent.dgamma[k]).amax() < 1e-6);
        }
    }

    #[test]
    fn constant_family_pairs_to_zero() {
        let alg = cotangent_algebroid(&PoissonBivector::zero(Chart::cube(2, 1.0)));
        let grid = TimeGrid::new(33).unwrap();
        let p = solve_base_path(&alg, &[0.1, 0.1], vec![DVector::zeros(2); 33], grid).unwrap();
        let fam = PathFamily::new(&alg, EpsilonGrid::new(5).unwrap(), vec![p; 5], 1e-9).unwrap();
        let r = check_kernel_containment(&alg, &fam, 10, 1e-12, 4, Execution::Parallel).unwrap();
        assert_eq!(r.max_pairing, 0.0);
    }
}
