//! Chart-local Lie algebroids in a fixed frame `e_1..e_r`.
//!
//! Conventions used throughout the crate:
//!
//! * `{f, g} = Σ π_ij ∂_i f ∂_j g`, so `π_12 = {x1, x2}`.
//! * The cotangent algebroid of `π` has anchor `ρ(dx_i) = Σ_j π_ij ∂_j` (the
//!   Hamiltonian vector field of `x_i`) and structure functions
//!   `c^k_ij = ∂_k π_ij`, from `[dx_i, dx_j] = d{x_i, x_j}`.
//! * A connection is given by Christoffel matrices `Γ_m` (one `r×r` matrix
//!   per base coordinate): `∇_v α = v(α) + Σ_m v^m Γ_m α`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exec::Execution;
use crate::expr::{EvalError, Expr};
use crate::report::CheckRecord;
use crate::sampling::{point_in_box, stream, DEFAULT_SEED};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebroidError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field `{field}` references x{index} on a chart of dimension {dim}")]
    VariableOutOfChart {
        field: String,
        index: usize,
        dim: usize,
    },
    #[error("entry ({i},{j}) is not antisymmetric")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("structure constants violate the Jacobi identity (residual {residual:e})")]
    JacobiViolation { residual: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, AlgebroidError>;

/// Axis-aligned box chart. A chart of dimension zero models a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Chart {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(AlgebroidError::InvalidChart(
                "lower and upper bounds differ in length".into(),
            ));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(AlgebroidError::InvalidChart(format!(
                "axis {} has lower bound {} not below upper bound {}",
                i + 1,
                lower[i],
                upper[i]
            )));
        }
        Ok(Chart { lower, upper })
    }

    /// `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Chart::new(vec![-half_width; dim], vec![half_width; dim]).expect("positive half width")
    }

    pub fn point() -> Self {
        Chart {
            lower: vec![],
            upper: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        point_in_box(rng, &self.lower, &self.upper)
    }
}

fn check_vars(e: &Expr, field: impl Fn() -> String, dim: usize) -> Result<()> {
    match e.max_var() {
        Some(m) if m >= dim => Err(AlgebroidError::VariableOutOfChart {
            field: field(),
            index: m + 1,
            dim,
        }),
        _ => Ok(()),
    }
}

/// Index of the pair `i < j` among the `n(n-1)/2` ordered pairs.
pub(crate) fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Antisymmetric bivector `π` stored by its entries above the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonBivector {
    chart: Chart,
    upper: Vec<Expr>,
}

impl PoissonBivector {
    /// Build from one-based `(i, j, π_ij)` triples; unlisted entries are zero.
    /// A triple with `i > j` sets `π_ji = -expr`.
    pub fn new(chart: Chart, entries: Vec<(usize, usize, Expr)>) -> Result<Self> {
        let n = chart.dim();
        let mut upper = vec![Expr::zero(); n * n.saturating_sub(1) / 2];
        let mut seen = vec![false; upper.len()];
        for (i, j, e) in entries {
            if i == 0 || j == 0 || i > n || j > n {
                return Err(AlgebroidError::Shape(format!(
                    "bivector index ({i},{j}) outside 1..={n}"
                )));
            }
            if i == j {
                return Err(AlgebroidError::NotAntisymmetric { i, j });
            }
            check_vars(&e, || format!("poisson[{i},{j}]"), n)?;
            let (a, b, e) = if i < j { (i, j, e) } else { (j, i, -e) };
            let idx = pair_index(n, a - 1, b - 1);
            if seen[idx] {
                return Err(AlgebroidError::Shape(format!(
                    "entry ({a},{b}) given more than once"
                )));
            }
            seen[idx] = true;
            upper[idx] = e;
        }
        Ok(PoissonBivector { chart, upper })
    }

    pub fn zero(chart: Chart) -> Self {
        PoissonBivector::new(chart, vec![]).expect("zero bivector")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `π_ij` for zero-based indices.
    pub fn entry(&self, i: usize, j: usize) -> Expr {
        let n = self.dim();
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.upper[pair_index(n, i, j)].clone(),
            std::cmp::Ordering::Greater => -self.upper[pair_index(n, j, i)].clone(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.upper.iter().all(Expr::is_constant)
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = self.upper[pair_index(n, i, j)].eval(x)?;
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Ok(m)
    }

    /// `{f, g} = Σ π_ij ∂_i f ∂_j g` as an expression.
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        let n = self.dim();
        let df: Vec<Expr> = (0..n).map(|i| f.diff(i)).collect();
        let dg: Vec<Expr> = (0..n).map(|i| g.diff(i)).collect();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = &self.upper[pair_index(n, i, j)];
                if p.is_zero() {
                    continue;
                }
                let antisym = df[i].clone() * dg[j].clone() - df[j].clone() * dg[i].clone();
                terms.push(p.clone() * antisym);
            }
        }
        Expr::sum(terms)
    }

    /// Components `J_ijk = Σ_l (π_il ∂_l π_jk + π_jl ∂_l π_ki + π_kl ∂_l π_ij)`
    /// for `i < j < k`.
    pub fn jacobiator(&self) -> Vec<((usize, usize, usize), Expr)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let cyc = |a: usize, b: usize, c: usize| {
                        Expr::sum((0..n).map(|l| self.entry(a, l) * self.entry(b, c).diff(l)))
                    };
                    out.push(((i, j, k), cyc(i, j, k) + cyc(j, k, i) + cyc(k, i, j)));
                }
            }
        }
        out
    }
}

/// Section in the frame `e_1..e_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub components: Vec<Expr>,
}

impl Section {
    pub fn new(components: Vec<Expr>) -> Self {
        Section { components }
    }

    /// The constant frame section `e_i` (zero-based).
    pub fn frame(rank: usize, i: usize) -> Self {
        Section {
            components: (0..rank)
                .map(|k| if k == i { Expr::one() } else { Expr::zero() })
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn scale(&self, f: &Expr) -> Section {
        Section::new(
            self.components
                .iter()
                .map(|c| f.clone() * c.clone())
                .collect(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        let v: std::result::Result<Vec<f64>, EvalError> =
            self.components.iter().map(|c| c.eval(x)).collect();
        Ok(DVector::from_vec(v?))
    }
}

/// Numerical values of all algebroid fields at one base point.
#[derive(Clone, Debug)]
pub struct FieldValues {
    /// `n × r` anchor matrix.
    pub anchor: DMatrix<f64>,
    /// Full structure array, `c^k_ij` at `(i * r + j) * r + k`.
    pub structure: Vec<f64>,
    /// Christoffel matrices `Γ_m`, absent for the zero connection.
    pub christoffel: Option<Vec<DMatrix<f64>>>,
}

impl FieldValues {
    pub fn rank(&self) -> usize {
        self.anchor.ncols()
    }

    /// `Σ c^k_ij a^i b^j`.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let r = self.rank();
        let mut out = DVector::zeros(r);
        for i in 0..r {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..r {
                let w = a[i] * b[j];
                if w == 0.0 {
                    continue;
                }
                let base = (i * r + j) * r;
                for k in 0..r {
                    out[k] += self.structure[base + k] * w;
                }
            }
        }
        out
    }

    /// `Σ_m v^m Γ_m α`; zero for the zero connection.
    pub fn christoffel_action(&self, v: &DVector<f64>, alpha: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(alpha.len());
        if let Some(gammas) = &self.christoffel {
            for (m, g) in gammas.iter().enumerate() {
                if v[m] != 0.0 {
                    out += g * alpha * v[m];
                }
            }
        }
        out
    }

    /// `T_∇(a, b) = ∇_{ρ(b)} a − ∇_{ρ(a)} b + [a, b]` with `a`, `b` extended
    /// as constant frame combinations.
    pub fn torsion(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut t = self.bracket(a, b);
        if self.christoffel.is_some() {
            let rho_a = &self.anchor * a;
            let rho_b = &self.anchor * b;
            t += self.christoffel_action(&rho_b, a);
            t -= self.christoffel_action(&rho_a, b);
        }
        t
    }
}

/// Lie algebroid on a single box chart with trivialized bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Algebroid {
    chart: Chart,
    rank: usize,
    /// Row-major `n × r`: entry `(j, i)` is the `∂_j` component of `ρ(e_i)`.
    anchor: Vec<Expr>,
    /// `c^k_ij` for `i < j` at `pair_index(r, i, j) * r + k`.
    structure: Vec<Expr>,
    /// `Γ_m` entry `(k, l)` at `(m * r + k) * r + l`.
    connection: Option<Vec<Expr>>,
}

impl Algebroid {
    /// `anchor[j][i]` is the `∂_{j+1}` component of `ρ(e_{i+1})`;
    /// `structure` lists one-based `(i, j, k, c^k_ij)`; unlisted entries are
    /// zero and `i > j` entries are stored as `c^k_ji = -expr`.
    pub fn new(
        chart: Chart,
        rank: usize,
        anchor: Vec<Vec<Expr>>,
        structure: Vec<(usize, usize, usize, Expr)>,
    ) -> Result<Self> {
        let n = chart.dim();
        if anchor.len() != n || anchor.iter().any(|row| row.len() != rank) {
            return Err(AlgebroidError::Shape(format!(
                "anchor must be {n}×{rank}"
            )));
        }
        let mut flat = Vec::with_capacity(n * rank);
        for (j, row) in anchor.into_iter().enumerate() {
            for (i, e) in row.into_iter().enumerate() {
                check_vars(&e, || format!("anchor[{},{}]", j + 1, i + 1), n)?;
                flat.push(e);
            }
        }
        let pairs = rank * rank.saturating_sub(1) / 2;
        let mut st = vec![Expr::zero(); pairs * rank];
        let mut seen = vec![false; st.len()];
        for (i, j, k, e) in structure {
            if i == 0 || j == 0 || k == 0 || i > rank || j > rank || k > rank {
                return Err(AlgebroidError::Shape(format!(
                    "structure index ({i},{j},{k}) outside 1..={rank}"
                )));
            }
            if i == j {
                return Err(AlgebroidError::NotAntisymmetric { i, j });
            }
            check_vars(&e, || format!("structure[{i},{j},{k}]"), n)?;
            let (a, b, e) = if i < j { (i, j, e) } else { (j, i, -e) };
            let idx = pair_index(rank, a - 1, b - 1) * rank + (k - 1);
            if seen[idx] {
                return Err(AlgebroidError::Shape(format!(
                    "structure entry ({a},{b},{k}) given more than once"
                )));
            }
            seen[idx] = true;
            st[idx] = e;
        }
        Ok(Algebroid {
            chart,
            rank,
            anchor: flat,
            structure: st,
            connection: None,
        })
    }

    /// Attach Christoffel matrices, `gamma[m][k][l]` for base coordinate `m`.
    pub fn with_connection(mut self, gamma: Vec<Vec<Vec<Expr>>>) -> Result<Self> {
        let (n, r) = (self.dim(), self.rank);
        if gamma.len() != n
            || gamma
                .iter()
                .any(|g| g.len() != r || g.iter().any(|row| row.len() != r))
        {
            return Err(AlgebroidError::Shape(format!(
                "connection must be {n} matrices of size {r}×{r}"
            )));
        }
        let mut flat = Vec::with_capacity(n * r * r);
        for (m, g) in gamma.into_iter().enumerate() {
            for (k, row) in g.into_iter().enumerate() {
                for (l, e) in row.into_iter().enumerate() {
                    check_vars(&e, || format!("connection[{},{},{}]", m + 1, k + 1, l + 1), n)?;
                    flat.push(e);
                }
            }
        }
        self.connection = if flat.iter().all(Expr::is_zero) {
            None
        } else {
            Some(flat)
        };
        Ok(self)
    }

    pub fn without_connection(&self) -> Self {
        Algebroid {
            connection: None,
            ..self.clone()
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn has_connection(&self) -> bool {
        self.connection.is_some()
    }

    /// `∂_{j}` component of `ρ(e_i)` (zero-based).
    pub fn anchor_entry(&self, j: usize, i: usize) -> &Expr {
        &self.anchor[j * self.rank + i]
    }

    /// `c^k_ij` (zero-based, any order).
    pub fn structure_entry(&self, i: usize, j: usize, k: usize) -> Expr {
        let r = self.rank;
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.structure[pair_index(r, i, j) * r + k].clone(),
            std::cmp::Ordering::Greater => -self.structure[pair_index(r, j, i) * r + k].clone(),
        }
    }

    pub fn christoffel_entry(&self, m: usize, k: usize, l: usize) -> Expr {
        let r = self.rank;
        self.connection
            .as_ref()
            .map(|c| c[(m * r + k) * r + l].clone())
            .unwrap_or_else(Expr::zero)
    }

    /// True when the anchor is structurally zero.
    pub fn anchor_is_zero(&self) -> bool {
        self.anchor.iter().all(Expr::is_zero)
    }

    /// True when every structure function is structurally zero.
    pub fn structure_is_zero(&self) -> bool {
        self.structure.iter().all(Expr::is_zero)
    }

    pub fn anchor_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (n, r) = (self.dim(), self.rank);
        let mut m = DMatrix::zeros(n, r);
        for j in 0..n {
            for i in 0..r {
                m[(j, i)] = self.anchor[j * r + i].eval(x)?;
            }
        }
        Ok(m)
    }

    /// Symbolic partials `∂_l ρ_{ji}`, stored at `(l * n + j) * r + i`.
    pub fn anchor_partials(&self) -> Vec<Expr> {
        let (n, r) = (self.dim(), self.rank);
        let mut out = Vec::with_capacity(n * n * r);
        for l in 0..n {
            for j in 0..n {
                for i in 0..r {
                    out.push(self.anchor[j * r + i].diff(l));
                }
            }
        }
        out
    }

    pub fn fields_at(&self, x: &[f64]) -> Result<FieldValues> {
        if x.len() != self.dim() {
            return Err(AlgebroidError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let r = self.rank;
        let mut structure = vec![0.0; r * r * r];
        for i in 0..r {
            for j in i + 1..r {
                for k in 0..r {
                    let v = self.structure[pair_index(r, i, j) * r + k].eval(x)?;
                    structure[(i * r + j) * r + k] = v;
                    structure[(j * r + i) * r + k] = -v;
                }
            }
        }
        let christoffel = match &self.connection {
            None => None,
            Some(c) => {
                let mut mats = Vec::with_capacity(self.dim());
                for m in 0..self.dim() {
                    let mut g = DMatrix::zeros(r, r);
                    for k in 0..r {
                        for l in 0..r {
                            g[(k, l)] = c[(m * r + k) * r + l].eval(x)?;
                        }
                    }
                    mats.push(g);
                }
                Some(mats)
            }
        };
        Ok(FieldValues {
            anchor: self.anchor_at(x)?,
            structure,
            christoffel,
        })
    }

    /// `ρ(s)(f) = Σ_l (Σ_a ρ_la s^a) ∂_l f`.
    pub fn anchor_derivation(&self, s: &Section, f: &Expr) -> Expr {
        let (n, r) = (self.dim(), self.rank);
        Expr::sum((0..n).map(|l| {
            let v = Expr::sum((0..r).map(|a| self.anchor[l * r + a].clone() * s.components[a].clone()));
            if v.is_zero() {
                Expr::zero()
            } else {
                v * f.diff(l)
            }
        }))
    }
}

/// Cotangent algebroid `T*M` of a bivector.
pub fn cotangent_algebroid(pi: &PoissonBivector) -> Algebroid {
    let n = pi.dim();
    let anchor: Vec<Vec<Expr>> = (0..n)
        .map(|j| (0..n).map(|i| pi.entry(i, j)).collect())
        .collect();
    let mut structure = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = pi.entry(i, j);
            for k in 0..n {
                let d = p.diff(k);
                if !d.is_zero() {
                    structure.push((i + 1, j + 1, k + 1, d));
                }
            }
        }
    }
    Algebroid::new(pi.chart().clone(), n, anchor, structure).expect("cotangent fields are well formed")
}

/// Structure constants `c^k_ij`, indexed `[i][j][k]` (zero-based).
pub type StructureConstants = Vec<Vec<Vec<f64>>>;

/// Largest Jacobiator entry `Σ_m c^m_ij c^l_mk + cyclic`.
pub fn constants_jacobiator(c: &StructureConstants) -> f64 {
    let r = c.len();
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                for l in 0..r {
                    let mut s = 0.0;
                    for m in 0..r {
                        s += c[i][j][m] * c[m][k][l] + c[j][k][m] * c[m][i][l] + c[k][i][m] * c[m][j][l];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

/// Lie algebra seen as an algebroid over a point.
pub fn lie_algebra_algebroid(constants: &StructureConstants) -> Result<Algebroid> {
    let r = constants.len();
    if constants
        .iter()
        .any(|m| m.len() != r || m.iter().any(|v| v.len() != r))
    {
        return Err(AlgebroidError::Shape(format!(
            "structure constants must be {r}×{r}×{r}"
        )));
    }
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                if (constants[i][j][k] + constants[j][i][k]).abs() > 1e-12 {
                    return Err(AlgebroidError::NotAntisymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
    }
    let residual = constants_jacobiator(constants);
    if residual > 1e-12 {
        return Err(AlgebroidError::JacobiViolation { residual });
    }
    let mut structure = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            for k in 0..r {
                if constants[i][j][k] != 0.0 {
                    structure.push((i + 1, j + 1, k + 1, Expr::num(constants[i][j][k])));
                }
            }
        }
    }
    Algebroid::new(Chart::point(), r, vec![], structure)
}

/// `ε_ijk`, the structure constants of so(3) in the basis with `[e1, e2] = e3`.
pub fn so3_constants() -> StructureConstants {
    let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        c[i][j][k] = 1.0;
        c[j][i][k] = -1.0;
    }
    c
}

/// `[s1, s2]^k = Σ c^k_ij s1^i s2^j + ρ(s1)(s2^k) − ρ(s2)(s1^k)`.
pub fn bracket_of_sections(alg: &Algebroid, s1: &Section, s2: &Section) -> Result<Section> {
    let r = alg.rank();
    for s in [s1, s2] {
        if s.rank() != r {
            return Err(AlgebroidError::DimensionMismatch {
                expected: r,
                got: s.rank(),
            });
        }
    }
    let comps = (0..r)
        .map(|k| {
            let mut algebraic = Vec::new();
            for i in 0..r {
                for j in 0..r {
                    if i == j || s1.components[i].is_zero() || s2.components[j].is_zero() {
                        continue;
                    }
                    let c = alg.structure_entry(i, j, k);
                    if c.is_zero() {
                        continue;
                    }
                    algebraic.push(c * s1.components[i].clone() * s2.components[j].clone());
                }
            }
            Expr::sum(algebraic) + alg.anchor_derivation(s1, &s2.components[k])
                - alg.anchor_derivation(s2, &s1.components[k])
        })
        .collect();
    Ok(Section::new(comps))
}

/// Pointwise torsion `T_∇(a, b)` at `base`, using the Christoffel form with
/// `a` and `b` extended as constant frame combinations.
pub fn torsion(
    alg: &Algebroid,
    a: &DVector<f64>,
    b: &DVector<f64>,
    base: &[f64],
) -> Result<DVector<f64>> {
    let r = alg.rank();
    for v in [a, b] {
        if v.len() != r {
            return Err(AlgebroidError::DimensionMismatch {
                expected: r,
                got: v.len(),
            });
        }
    }
    Ok(alg.fields_at(base)?.torsion(a, b))
}

/// Outcome of a sampled axiom check.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub name: &'static str,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
    /// Sample point with the largest residual.
    pub worst_point: Vec<f64>,
}

impl AxiomReport {
    fn from_residuals(
        name: &'static str,
        points: Vec<Vec<f64>>,
        residuals: Vec<f64>,
        tol: f64,
        seed: u64,
    ) -> Self {
        let mut worst = 0;
        let mut max: f64 = 0.0;
        for (i, &r) in residuals.iter().enumerate() {
            if r.is_nan() || r > max {
                worst = i;
                max = r;
                if r.is_nan() {
                    break;
                }
            }
        }
        AxiomReport {
            name,
            max_residual: max,
            tol,
            pass: max < tol,
            samples: points.len(),
            seed,
            worst_point: points.get(worst).cloned().unwrap_or_default(),
        }
    }

    pub fn record(&self) -> CheckRecord {
        CheckRecord::below(self.name, self.max_residual, self.tol)
    }
}

/// Sample settings shared by the axiom checkers.
#[derive(Clone, Copy, Debug)]
pub struct Sampling {
    pub samples: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Sampling {
    pub fn new(samples: usize) -> Self {
        Sampling {
            samples,
            seed: DEFAULT_SEED,
            exec: Execution::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn points(&self, chart: &Chart) -> Vec<Vec<f64>> {
        let mut rng = stream(self.seed, 0);
        (0..self.samples.max(1)).map(|_| chart.sample(&mut rng)).collect()
    }
}

fn residual_or_nan<T>(r: std::result::Result<f64, T>) -> f64 {
    r.unwrap_or(f64::NAN)
}

/// `max |ρ([e_i, e_j]) − [ρ(e_i), ρ(e_j)]|` at one point.
pub fn anchor_homomorphism_residual(alg: &Algebroid, partials: &[Expr], x: &[f64]) -> Result<f64> {
    let (n, r) = (alg.dim(), alg.rank());
    let fields = alg.fields_at(x)?;
    let mut d = vec![0.0; n * n * r];
    for (slot, e) in d.iter_mut().zip(partials) {
        *slot = e.eval(x)?;
    }
    let mut worst: f64 = 0.0;
    for i in 0..r {
        for j in i + 1..r {
            for m in 0..n {
                let lhs: f64 = (0..r)
                    .map(|k| fields.structure[(i * r + j) * r + k] * fields.anchor[(m, k)])
                    .sum();
                let mut rhs = 0.0;
                for l in 0..n {
                    rhs += fields.anchor[(l, i)] * d[(l * n + m) * r + j]
                        - fields.anchor[(l, j)] * d[(l * n + m) * r + i];
                }
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// Compare `ρ([e_i, e_j])` with the commutator of anchor vector fields at
/// random chart points.
pub fn check_anchor_homomorphism(alg: &Algebroid, sampling: Sampling, tol: f64) -> AxiomReport {
    let partials = alg.anchor_partials();
    let points = sampling.points(alg.chart());
    let residuals = sampling
        .exec
        .map_slice(&points, |x| residual_or_nan(anchor_homomorphism_residual(alg, &partials, x)));
    AxiomReport::from_residuals("anchor_homomorphism", points, residuals, tol, sampling.seed)
}

/// Symbolic `[[e_i, e_j], e_k] + cyclic` for every `i < j < k`.
pub fn section_jacobiators(alg: &Algebroid) -> Result<Vec<Section>> {
    let r = alg.rank();
    let frame: Vec<Section> = (0..r).map(|i| Section::frame(r, i)).collect();
    let mut out = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            for k in j + 1..r {
                let t1 = bracket_of_sections(alg, &bracket_of_sections(alg, &frame[i], &frame[j])?, &frame[k])?;
                let t2 = bracket_of_sections(alg, &bracket_of_sections(alg, &frame[j], &frame[k])?, &frame[i])?;
                let t3 = bracket_of_sections(alg, &bracket_of_sections(alg, &frame[k], &frame[i])?, &frame[j])?;
                out.push(Section::new(
                    (0..r)
                        .map(|c| {
                            t1.components[c].clone() + t2.components[c].clone() + t3.components[c].clone()
                        })
                        .collect(),
                ));
            }
        }
    }
    Ok(out)
}

fn max_section_value(sections: &[Section], x: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in sections {
        for c in &s.components {
            worst = worst.max(c.eval(x)?.abs());
        }
    }
    Ok(worst)
}

/// Jacobi identity of the bracket on frame sections at random points.
pub fn check_section_jacobi(alg: &Algebroid, sampling: Sampling, tol: f64) -> AxiomReport {
    let points = sampling.points(alg.chart());
    let residuals = match section_jacobiators(alg) {
        Ok(jac) => sampling
            .exec
            .map_slice(&points, |x| residual_or_nan(max_section_value(&jac, x))),
        Err(_) => vec![f64::NAN; points.len()],
    };
    AxiomReport::from_residuals("section_jacobi", points, residuals, tol, sampling.seed)
}

/// Largest Jacobiator component of `π` at `x`.
pub fn poisson_jacobiator_at(pi: &PoissonBivector, x: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (_, e) in pi.jacobiator() {
        worst = worst.max(e.eval(x)?.abs());
    }
    Ok(worst)
}

/// Jacobi identity of a bivector at random points.
pub fn check_poisson_jacobi(pi: &PoissonBivector, sampling: Sampling, tol: f64) -> AxiomReport {
    let jac: Vec<Expr> = pi.jacobiator().into_iter().map(|(_, e)| e).collect();
    let points = sampling.points(pi.chart());
    let residuals = sampling.exec.map_slice(&points, |x| {
        residual_or_nan(
            jac.iter()
                .try_fold(0.0f64, |m, e| e.eval(x).map(|v| m.max(v.abs()))),
        )
    });
    AxiomReport::from_residuals("poisson_jacobi", points, residuals, tol, sampling.seed)
}
