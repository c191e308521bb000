//! Finite models of étale-stack calculus: a finite group acting on a chart,
//! invariant forms, the Poisson bracket induced on invariant functions by
//! an invariant symplectic form, and refinements of the atlas by identical
//! copies.
//!
//! For an action groupoid `G ⋉ M` the arrow `(g, x)` has source `x` and
//! target `g·x`, so `s*ω = t*ω` holds on the component of `g` exactly when
//! `φ_g* ω = ω`. Both forms of the check are implemented:
//! [`check_invariance`] pulls back symbolically, [`check_arrow_invariance`]
//! evaluates `s*ω` and `t*ω` on random tangent vectors at random arrows.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebroid::Chart;
use crate::exec::Execution;
use crate::expr::{ComposeError, EvalError, Expr};
use crate::report::CheckRecord;
use crate::sampling::{stream, symmetric_vector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EtaleError {
    #[error("multiplication table: {0}")]
    Table(String),
    #[error("action of element {element} does not respect the table (defect {defect:e})")]
    NotAnAction { element: usize, defect: f64 },
    #[error("form of degree {degree} on dimension {dim} needs {expected} coefficients, got {got}")]
    FormShape {
        dim: usize,
        degree: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("function `{function}` is not invariant under element {element} (defect {defect:e})")]
    NotInvariant {
        function: String,
        element: usize,
        defect: f64,
    },
    #[error("form is not invariant (defect {defect:e})")]
    FormNotInvariant { defect: f64 },
    #[error("form is degenerate at {point:?}")]
    Degenerate { point: Vec<f64> },
    #[error("a refinement needs at least two copies, got {0}")]
    TooFewCopies(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

pub type Result<T> = std::result::Result<T, EtaleError>;

/// Samples used by the pointwise checks.
pub const CHECK_SAMPLES: usize = 100;
/// Samples used to validate an action against its table.
pub const ACTION_SAMPLES: usize = 50;

/// A finite group acting on a chart by coordinate expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteActionGroupoid {
    chart: Chart,
    table: Vec<Vec<usize>>,
    identity: usize,
    action: Vec<Vec<Expr>>,
}

impl FiniteActionGroupoid {
    /// `table[g][h]` is the index of `gh`; `action[g]` the coordinates of
    /// `φ_g`. Checks `φ_g ∘ φ_h = φ_{gh}` and `φ_e = id` at random points.
    pub fn new(chart: Chart, table: Vec<Vec<usize>>, action: Vec<Vec<Expr>>, seed: u64) -> Result<Self> {
        let order = table.len();
        if order == 0 || table.iter().any(|row| row.len() != order || row.iter().any(|&g| g >= order)) {
            return Err(EtaleError::Table("table must be square with entries below the group order".into()));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| EtaleError::Table("no identity element".into()))?;
        for row in &table {
            let mut seen = vec![false; order];
            for &g in row {
                seen[g] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(EtaleError::Table("rows must be permutations".into()));
            }
        }
        if action.len() != order || action.iter().any(|a| a.len() != chart.dim()) {
            return Err(EtaleError::Dimension(format!(
                "need {order} maps with {} coordinates each",
                chart.dim()
            )));
        }
        let groupoid = FiniteActionGroupoid {
            chart,
            table,
            identity,
            action,
        };
        groupoid.check_action(ACTION_SAMPLES, seed, 1e-9)?;
        Ok(groupoid)
    }

    /// `Z/2` acting by `x ↦ −x`.
    pub fn central_inversion(chart: Chart) -> Self {
        let n = chart.dim();
        let id: Vec<Expr> = (0..n).map(Expr::var).collect();
        let inv: Vec<Expr> = (0..n).map(|i| Expr::neg(Expr::var(i))).collect();
        FiniteActionGroupoid::new(chart, vec![vec![0, 1], vec![1, 0]], vec![id, inv], 0)
            .expect("inversion is an action")
    }

    /// `Z/4` acting on the plane by quarter turns.
    pub fn quarter_turns(chart: Chart) -> Self {
        let (x, y) = (Expr::var(0), Expr::var(1));
        let action = vec![
            vec![x.clone(), y.clone()],
            vec![Expr::neg(y.clone()), x.clone()],
            vec![Expr::neg(x.clone()), Expr::neg(y.clone())],
            vec![y, Expr::neg(x)],
        ];
        let table = (0..4).map(|g| (0..4).map(|h| (g + h) % 4).collect()).collect();
        FiniteActionGroupoid::new(chart, table, action, 0).expect("rotations are an action")
    }

    pub fn trivial(chart: Chart) -> Self {
        let id = (0..chart.dim()).map(Expr::var).collect();
        FiniteActionGroupoid::new(chart, vec![vec![0]], vec![id], 0).expect("trivial action")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn multiply(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn action(&self, g: usize) -> &[Expr] {
        &self.action[g]
    }

    /// `φ_g(x)`.
    pub fn act(&self, g: usize, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.action[g].iter().map(|e| e.eval(x)).collect::<std::result::Result<_, _>>()?)
    }

    /// Largest `|φ_g(φ_h(x)) − φ_{gh}(x)|` and `|φ_e(x) − x|` over samples;
    /// the composition is done symbolically.
    pub fn check_action(&self, samples: usize, seed: u64, tol: f64) -> Result<f64> {
        let points = self.sample_points(samples, seed);
        let mut worst: f64 = 0.0;
        for g in 0..self.order() {
            for h in 0..self.order() {
                let composed = self.action[g]
                    .iter()
                    .map(|e| e.compose(&self.action[h]))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                let gh = &self.action[self.table[g][h]];
                let mut defect: f64 = 0.0;
                for x in &points {
                    for (a, b) in composed.iter().zip(gh) {
                        defect = defect.max((a.eval(x)? - b.eval(x)?).abs());
                    }
                }
                if !(defect <= tol) {
                    return Err(EtaleError::NotAnAction { element: g, defect });
                }
                worst = worst.max(defect);
            }
        }
        for x in &points {
            let y = self.act(self.identity, x)?;
            let defect = y.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if !(defect <= tol) {
                return Err(EtaleError::NotAnAction {
                    element: self.identity,
                    defect,
                });
            }
        }
        Ok(worst)
    }

    pub fn sample_points(&self, samples: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..samples).map(|_| self.chart.sample(&mut rng)).collect()
    }
}

/// Increasing index tuples `i1 < … < ik` in lexicographic order.
pub fn index_tuples(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            go(i + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if degree <= dim {
        go(0, dim, degree, &mut Vec::new(), &mut out);
    }
    out
}

/// A `k`-form `Σ_I ω_I dx_I` on a chart, `I` running over [`index_tuples`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoordForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<Expr>,
}

impl CoordForm {
    pub fn new(dim: usize, degree: usize, coeffs: Vec<Expr>) -> Result<Self> {
        let expected = index_tuples(dim, degree).len();
        if coeffs.len() != expected {
            return Err(EtaleError::FormShape {
                dim,
                degree,
                expected,
                got: coeffs.len(),
            });
        }
        if let Some(m) = coeffs.iter().filter_map(Expr::max_var).max() {
            if m >= dim {
                return Err(EtaleError::Dimension(format!(
                    "coefficient uses x{} on a {dim}-dimensional chart",
                    m + 1
                )));
            }
        }
        Ok(CoordForm { dim, degree, coeffs })
    }

    /// 2-form from entries `(i, j, ω_ij)` with one-based `i ≠ j`; entries
    /// with `i > j` are stored with the sign flipped.
    pub fn two_form(dim: usize, entries: Vec<(usize, usize, Expr)>) -> Result<Self> {
        let tuples = index_tuples(dim, 2);
        let mut coeffs = vec![Expr::zero(); tuples.len()];
        for (i, j, e) in entries {
            if i == j || i == 0 || j == 0 || i > dim || j > dim {
                return Err(EtaleError::Dimension(format!("invalid index pair ({i}, {j})")));
            }
            let (a, b, e) = if i < j { (i - 1, j - 1, e) } else { (j - 1, i - 1, Expr::neg(e)) };
            let slot = tuples.iter().position(|t| t[0] == a && t[1] == b).unwrap();
            coeffs[slot] = Expr::add(coeffs[slot].clone(), e);
        }
        CoordForm::new(dim, 2, coeffs)
    }

    /// `Σ_i dx_{2i-1} ∧ dx_{2i}` scaled by `f`.
    pub fn darboux(dim: usize, f: Expr) -> Result<Self> {
        if dim % 2 != 0 {
            return Err(EtaleError::Dimension("symplectic forms need an even dimension".into()));
        }
        CoordForm::two_form(dim, (0..dim / 2).map(|i| (2 * i + 1, 2 * i + 2, f.clone())).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coeff_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.coeffs.iter().map(|c| c.eval(x)).collect::<std::result::Result<_, _>>()?)
    }

    /// `ω_x(v_1, …, v_k) = Σ_I ω_I(x) det[v_j]_I`.
    pub fn eval_on(&self, x: &[f64], vectors: &[DVector<f64>]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(EtaleError::Dimension("wrong number of tangent vectors".into()));
        }
        let values = self.coeff_values(x)?;
        let mut total = 0.0;
        for (tuple, w) in index_tuples(self.dim, self.degree).iter().zip(values) {
            let m = DMatrix::from_fn(self.degree, self.degree, |r, c| vectors[c][tuple[r]]);
            total += w * m.determinant();
        }
        Ok(total)
    }

    /// Antisymmetric matrix `W_ij = ω(∂_i, ∂_j)` of a 2-form.
    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let symbolic = self.symbolic_matrix()?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = symbolic[i][j].eval(x)?;
            }
        }
        Ok(m)
    }

    fn symbolic_matrix(&self) -> Result<Vec<Vec<Expr>>> {
        if self.degree != 2 {
            return Err(EtaleError::Dimension("a 2-form is required".into()));
        }
        let mut m = vec![vec![Expr::zero(); self.dim]; self.dim];
        for (t, c) in index_tuples(self.dim, 2).iter().zip(&self.coeffs) {
            m[t[0]][t[1]] = c.clone();
            m[t[1]][t[0]] = Expr::neg(c.clone());
        }
        Ok(m)
    }

    /// Largest coefficient difference at sample points.
    pub fn max_difference(&self, other: &CoordForm, points: &[Vec<f64>]) -> Result<f64> {
        if self.dim != other.dim || self.degree != other.degree {
            return Ok(f64::INFINITY);
        }
        let mut worst: f64 = 0.0;
        for x in points {
            for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
                worst = worst.max((a.eval(x)? - b.eval(x)?).abs());
            }
        }
        Ok(worst)
    }
}

fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        n => Expr::sum((0..n).map(|c| {
            let minor: Vec<Vec<Expr>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, e)| e.clone()).collect())
                .collect();
            let term = Expr::mul(m[0][c].clone(), symbolic_det(&minor));
            if c % 2 == 0 { term } else { Expr::neg(term) }
        })),
    }
}

/// `φ*ω` with `(φ*ω)_J = Σ_I ω_I(φ) det(∂φ_I / ∂x_J)`.
pub fn pullback_form(w: &CoordForm, map: &[Expr]) -> Result<CoordForm> {
    if map.len() != w.dim {
        return Err(EtaleError::Dimension(format!(
            "map has {} components, form lives in dimension {}",
            map.len(),
            w.dim
        )));
    }
    let tuples = index_tuples(w.dim, w.degree);
    let composed = w
        .coeffs
        .iter()
        .map(|c| c.compose(map))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let jac: Vec<Vec<Expr>> = map.iter().map(|f| (0..w.dim).map(|j| f.diff(j)).collect()).collect();
    let coeffs = tuples
        .iter()
        .map(|cols| {
            Expr::sum(tuples.iter().zip(&composed).filter(|(_, c)| !c.is_zero()).map(|(rows, c)| {
                let minor: Vec<Vec<Expr>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| jac[r][c].clone()).collect())
                    .collect();
                Expr::mul(c.clone(), symbolic_det(&minor))
            }))
        })
        .collect();
    CoordForm::new(w.dim, w.degree, coeffs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub max_defect: f64,
    pub worst_element: Option<usize>,
    pub tol: f64,
    pub pass: bool,
}

impl InvarianceReport {
    pub fn record(&self, name: &str) -> CheckRecord {
        CheckRecord::below(name, self.max_defect, self.tol)
    }
}

fn invariance_report(defects: Vec<(usize, f64)>, tol: f64) -> InvarianceReport {
    let worst = defects
        .iter()
        .copied()
        .fold(None, |acc: Option<(usize, f64)>, (g, d)| match acc {
            Some((_, m)) if !(d > m) && !d.is_nan() => acc,
            _ => Some((g, d)),
        });
    let max_defect = worst.map_or(0.0, |w| w.1);
    InvarianceReport {
        max_defect,
        worst_element: worst.map(|w| w.0),
        tol,
        pass: max_defect < tol,
    }
}

/// Compare `φ_g* ω` with `ω` for every non-identity `g` at
/// [`CHECK_SAMPLES`] random points.
pub fn check_invariance(
    groupoid: &FiniteActionGroupoid,
    w: &CoordForm,
    tol: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    let points = groupoid.sample_points(CHECK_SAMPLES, seed);
    let mut defects = Vec::new();
    for g in (0..groupoid.order()).filter(|&g| g != groupoid.identity()) {
        let pulled = pullback_form(w, groupoid.action(g))?;
        defects.push((g, pulled.max_difference(w, &points)?));
    }
    Ok(invariance_report(defects, tol))
}

/// Compare `s*ω` and `t*ω` on random tangent vectors at random arrows
/// `(g, x)`; the pushforward by `t` uses the numerically evaluated
/// Jacobian of `φ_g`.
pub fn check_arrow_invariance(
    groupoid: &FiniteActionGroupoid,
    w: &CoordForm,
    tol: f64,
    seed: u64,
) -> Result<InvarianceReport> {
    let n = groupoid.dim();
    let mut rng = stream(seed, 1);
    let mut defects = Vec::new();
    for g in 0..groupoid.order() {
        let jac: Vec<Vec<Expr>> = groupoid
            .action(g)
            .iter()
            .map(|f| (0..n).map(|j| f.diff(j)).collect())
            .collect();
        let mut worst: f64 = 0.0;
        for _ in 0..CHECK_SAMPLES {
            let x = groupoid.chart().sample(&mut rng);
            let vs: Vec<DVector<f64>> = (0..w.degree())
                .map(|_| DVector::from_vec(symmetric_vector(&mut rng, n, 1.0)))
                .collect();
            let mut dphi = DMatrix::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    dphi[(r, c)] = jac[r][c].eval(&x)?;
                }
            }
            let pushed: Vec<DVector<f64>> = vs.iter().map(|v| &dphi * v).collect();
            let source = w.eval_on(&x, &vs)?;
            let target = w.eval_on(&groupoid.act(g, &x)?, &pushed)?;
            worst = worst.max((source - target).abs());
        }
        defects.push((g, worst));
    }
    Ok(invariance_report(defects, tol))
}

/// Largest `|f∘φ_g − f|` over elements and sample points.
pub fn function_invariance_defect(
    groupoid: &FiniteActionGroupoid,
    f: &Expr,
    seed: u64,
) -> Result<(usize, f64)> {
    let points = groupoid.sample_points(CHECK_SAMPLES, seed);
    let mut worst = (groupoid.identity(), 0.0_f64);
    for g in 0..groupoid.order() {
        let moved = f.compose(groupoid.action(g))?;
        for x in &points {
            let d = (moved.eval(x)? - f.eval(x)?).abs();
            if d > worst.1 || d.is_nan() {
                worst = (g, d);
            }
        }
    }
    Ok(worst)
}

/// Symbolic Poisson bivector `Π = −W⁻¹` of a 2-form, assembled from
/// cofactors over the determinant; the division happens at evaluation.
pub fn symbolic_bivector(w: &CoordForm) -> Result<Vec<Vec<Expr>>> {
    let m = w.symbolic_matrix()?;
    let n = m.len();
    let det = symbolic_det(&m);
    let mut pi = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            // (W⁻¹)_ij = C_ji / det, C the cofactor matrix.
            let minor: Vec<Vec<Expr>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| (0..n).filter(|&c| c != i).map(|c| m[r][c].clone()).collect())
                .collect();
            let cof = symbolic_det(&minor);
            let signed = if (i + j) % 2 == 0 { Expr::neg(cof) } else { cof };
            pi[i][j] = Expr::div(signed, det.clone());
        }
    }
    Ok(pi)
}

/// `Σ Π_ij ∂_i f ∂_j g`.
pub fn bracket_with(pi: &[Vec<Expr>], f: &Expr, g: &Expr) -> Expr {
    let n = pi.len();
    let df: Vec<Expr> = (0..n).map(|i| f.diff(i)).collect();
    let dg: Vec<Expr> = (0..n).map(|j| g.diff(j)).collect();
    let mut terms = Vec::new();
    for i in 0..n {
        if df[i].is_zero() {
            continue;
        }
        for j in 0..n {
            if pi[i][j].is_zero() || dg[j].is_zero() {
                continue;
            }
            terms.push(Expr::mul(Expr::mul(pi[i][j].clone(), df[i].clone()), dg[j].clone()));
        }
    }
    Expr::sum(terms)
}

/// Bracket `{f, g}` of invariant functions induced by an invariant
/// symplectic 2-form, normalized so that `dx1 ∧ dx2` gives `{x1, x2} = 1`.
pub fn invariant_poisson_bracket(
    groupoid: &FiniteActionGroupoid,
    w: &CoordForm,
    f: &Expr,
    g: &Expr,
    seed: u64,
) -> Result<Expr> {
    const TOL: f64 = 1e-9;
    if w.dim() != groupoid.dim() || w.degree() != 2 {
        return Err(EtaleError::Dimension("need a 2-form on the groupoid chart".into()));
    }
    for h in [f, g] {
        if let Some(m) = h.max_var() {
            if m >= groupoid.dim() {
                return Err(EtaleError::Dimension(format!("function `{h}` uses x{}", m + 1)));
            }
        }
        let (element, defect) = function_invariance_defect(groupoid, h, seed)?;
        if !(defect < TOL) {
            return Err(EtaleError::NotInvariant {
                function: h.to_string(),
                element,
                defect,
            });
        }
    }
    let inv = check_invariance(groupoid, w, TOL, seed)?;
    if !inv.pass {
        return Err(EtaleError::FormNotInvariant {
            defect: inv.max_defect,
        });
    }
    for x in groupoid.sample_points(CHECK_SAMPLES, seed) {
        let m = w.matrix_at(&x)?;
        let sv = m.singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if !(lo > 1e-10 * hi.max(1.0)) {
            return Err(EtaleError::Degenerate { point: x });
        }
    }
    Ok(bracket_with(&symbolic_bivector(w)?, f, g))
}

/// Largest `|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}|` at [`CHECK_SAMPLES`]
/// points, brackets taken with [`invariant_poisson_bracket`].
pub fn bracket_jacobiator(
    groupoid: &FiniteActionGroupoid,
    w: &CoordForm,
    [f, g, h]: [&Expr; 3],
    seed: u64,
) -> Result<f64> {
    let br = |a: &Expr, b: &Expr| invariant_poisson_bracket(groupoid, w, a, b, seed);
    let terms = [
        br(f, &br(g, h)?)?,
        br(g, &br(h, f)?)?,
        br(h, &br(f, g)?)?,
    ];
    let mut worst: f64 = 0.0;
    for x in groupoid.sample_points(CHECK_SAMPLES, seed ^ 0x51ed) {
        let mut total = 0.0;
        for t in &terms {
            total += t.eval(&x)?;
        }
        worst = worst.max(total.abs());
    }
    Ok(worst)
}

/// One arrow component `(i → j, g)` of a refined atlas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArrowComponent {
    pub source_copy: usize,
    pub target_copy: usize,
    pub element: usize,
}

/// Groupoid induced on `copies` identical copies of the chart, each mapped
/// to the original by the identity (the refinement morphism `φ`).
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedAtlas {
    base: FiniteActionGroupoid,
    copies: usize,
    arrows: Vec<ArrowComponent>,
}

impl RefinedAtlas {
    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn base(&self) -> &FiniteActionGroupoid {
        &self.base
    }

    pub fn arrows(&self) -> &[ArrowComponent] {
        &self.arrows
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    /// Coordinates of `φ` on copy `c`.
    pub fn refinement_map(&self, copy: usize) -> Vec<Expr> {
        debug_assert!(copy < self.copies);
        (0..self.base.dim()).map(Expr::var).collect()
    }

    /// `b ∘ a`, defined when `a` ends where `b` starts.
    pub fn compose(&self, b: ArrowComponent, a: ArrowComponent) -> Option<ArrowComponent> {
        (a.target_copy == b.source_copy).then(|| ArrowComponent {
            source_copy: a.source_copy,
            target_copy: b.target_copy,
            element: self.base.multiply(b.element, a.element),
        })
    }

    /// Coordinates of the arrow component as a map from its source copy
    /// to its target copy.
    pub fn arrow_map(&self, a: ArrowComponent) -> Vec<Expr> {
        let to_base = self.refinement_map(a.source_copy);
        self.base
            .action(a.element)
            .iter()
            .map(|e| e.compose(&to_base).expect("refinement map has full dimension"))
            .collect()
    }

    /// Composition check on every composable pair of components.
    pub fn check_composition(&self, samples: usize, seed: u64) -> Result<f64> {
        let points = self.base.sample_points(samples, seed);
        let mut worst: f64 = 0.0;
        for &a in &self.arrows {
            for &b in &self.arrows {
                let Some(ba) = self.compose(b, a) else { continue };
                let (ma, mb, mba) = (self.arrow_map(a), self.arrow_map(b), self.arrow_map(ba));
                let composed = mb.iter().map(|e| e.compose(&ma)).collect::<std::result::Result<Vec<_>, _>>()?;
                for x in &points {
                    for (u, v) in composed.iter().zip(&mba) {
                        worst = worst.max((u.eval(x)? - v.eval(x)?).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// The groupoid seen from one copy: arrows `(c → c, g)`.
    pub fn copy_groupoid(&self, copy: usize) -> FiniteActionGroupoid {
        let mut g = self.base.clone();
        g.action = (0..self.base.order())
            .map(|e| {
                self.arrow_map(ArrowComponent {
                    source_copy: copy,
                    target_copy: copy,
                    element: e,
                })
            })
            .collect();
        g
    }
}

/// Refine the atlas of `groupoid` by `copies` identical charts.
pub fn refine_atlas(groupoid: &FiniteActionGroupoid, copies: usize) -> Result<RefinedAtlas> {
    if copies < 2 {
        return Err(EtaleError::TooFewCopies(copies));
    }
    let mut arrows = Vec::with_capacity(copies * copies * groupoid.order());
    for source_copy in 0..copies {
        for target_copy in 0..copies {
            for element in 0..groupoid.order() {
                arrows.push(ArrowComponent {
                    source_copy,
                    target_copy,
                    element,
                });
            }
        }
    }
    Ok(RefinedAtlas {
        base: groupoid.clone(),
        copies,
        arrows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PresentationReport {
    pub copies: usize,
    pub max_defect: f64,
    pub tol: f64,
    pub pass: bool,
}

impl PresentationReport {
    pub fn record(&self, name: &str) -> CheckRecord {
        CheckRecord::below(name, self.max_defect, self.tol)
    }
}

/// Compute the bracket on the original atlas and on every copy of the
/// refinement (form and functions transported by `φ`), and compare them
/// pointwise through `φ`.
pub fn check_presentation_independence(
    groupoid: &FiniteActionGroupoid,
    refined: &RefinedAtlas,
    w: &CoordForm,
    f: &Expr,
    g: &Expr,
    tol: f64,
    seed: u64,
    exec: Execution,
) -> Result<PresentationReport> {
    let original = invariant_poisson_bracket(groupoid, w, f, g, seed)?;
    let points = groupoid.sample_points(CHECK_SAMPLES, seed ^ 0x9e37_79b9);
    let per_copy = exec.try_map_range(refined.copies(), |c| {
        let phi = refined.refinement_map(c);
        let wc = pullback_form(w, &phi)?;
        let (fc, gc) = (f.compose(&phi)?, g.compose(&phi)?);
        let local = invariant_poisson_bracket(&refined.copy_groupoid(c), &wc, &fc, &gc, seed)?;
        let transported = original.compose(&phi)?;
        let mut worst: f64 = 0.0;
        for x in &points {
            worst = worst.max((local.eval(x)? - transported.eval(x)?).abs());
        }
        Ok::<_, EtaleError>(worst)
    })?;
    let max_defect = per_copy.into_iter().fold(0.0, f64::max);
    Ok(PresentationReport {
        copies: refined.copies(),
        max_defect,
        tol,
        pass: max_defect < tol,
    })
}
