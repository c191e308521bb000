//! Exactly solvable groupoids used as ground truth for A-path classes.
//!
//! * Lie algebras with a matrix representation: the class of a path is its
//!   development `g(1)`, where `g' = g a(t)` and `g(0) = 1`.
//! * The zero Poisson structure: the groupoid is `T*M` with fiberwise
//!   addition and the class is `(γ(0), ∫ a)`.
//! * A constant nondegenerate Poisson structure: the groupoid is the pair
//!   groupoid and the class is `(γ(0), γ(1))`.
//!
//! Composition follows the path product: the class of `concatenate(p, q)`
//! is [`OracleClass::compose`]`(class(p), class(q))`. Because `q` runs
//! first, developments multiply as `dev(q) · dev(p)`.

mod families;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::algebroid::{Algebroid, AlgebroidError};
use crate::exec::Execution;
use crate::path::numerics::{corrected_trapezoid, inf_norm, interpolate};
use crate::path::{
    concatenate, constant_path, is_homotopic_along_family, reverse, A0Path, APath, PathError,
    PathFamily, TimeGrid,
};
use crate::report::CheckRecord;

pub use families::{
    log_derivative_oracle, random_connection, FlatCurve, LinearFamily, RotationFamily,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("representation has {generators} generators of size {size}, path rank is {rank}")]
    RepresentationMismatch {
        generators: usize,
        size: usize,
        rank: usize,
    },
    #[error("wrong algebroid for this oracle: {0}")]
    WrongAlgebroid(String),
    #[error("Poisson structure is degenerate")]
    Degenerate,
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Linear map `e_i ↦ L_i` from a Lie algebra into `d × d` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixRepresentation {
    generators: Vec<DMatrix<f64>>,
    orthogonal: bool,
    gram_inverse: DMatrix<f64>,
}

impl MatrixRepresentation {
    /// `orthogonal` marks representations into skew matrices, whose
    /// developments are projected back onto the orthogonal group.
    pub fn new(generators: Vec<DMatrix<f64>>, orthogonal: bool) -> Result<Self> {
        let size = generators.first().map_or(0, |g| g.nrows());
        if size == 0 || generators.iter().any(|g| g.nrows() != size || g.ncols() != size) {
            return Err(OracleError::RepresentationMismatch {
                generators: generators.len(),
                size,
                rank: generators.len(),
            });
        }
        let r = generators.len();
        let gram = DMatrix::from_fn(r, r, |i, j| generators[i].dot(&generators[j]));
        let gram_inverse = gram.try_inverse().ok_or(OracleError::RepresentationMismatch {
            generators: r,
            size,
            rank: r,
        })?;
        Ok(MatrixRepresentation {
            generators,
            orthogonal,
            gram_inverse,
        })
    }

    /// `L_i = hat(e_i)`, so that `[L_i, L_j] = ε_ijk L_k`.
    pub fn so3() -> Self {
        let gens = (0..3)
            .map(|i| {
                let mut e = nalgebra::Vector3::zeros();
                e[i] = 1.0;
                let h = e.cross_matrix();
                DMatrix::from_fn(3, 3, |r, c| h[(r, c)])
            })
            .collect();
        MatrixRepresentation::new(gens, true).expect("so(3) generators are independent")
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn size(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// `Σ a_i L_i`.
    pub fn represent(&self, a: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size(), self.size());
        for (ai, l) in a.iter().zip(&self.generators) {
            m += l * *ai;
        }
        m
    }

    /// Least-squares coordinates of `m` in the generators.
    pub fn coordinates(&self, m: &DMatrix<f64>) -> DVector<f64> {
        let rhs = DVector::from_iterator(self.rank(), self.generators.iter().map(|l| l.dot(m)));
        &self.gram_inverse * rhs
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank != self.rank() {
            return Err(OracleError::RepresentationMismatch {
                generators: self.rank(),
                size: self.size(),
                rank,
            });
        }
        Ok(())
    }
}

/// Endpoint of a development.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGroupElement {
    pub matrix: DMatrix<f64>,
    pub orthogonal: bool,
}

impl MatrixGroupElement {
    /// `|gᵀg − 1|∞` for orthogonal elements, 0 otherwise.
    pub fn orthogonality_residual(&self) -> f64 {
        if !self.orthogonal {
            return 0.0;
        }
        let n = self.matrix.nrows();
        (self.matrix.transpose() * &self.matrix - DMatrix::identity(n, n)).amax()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }
}

fn project_orthogonal(g: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = g.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => g.clone(),
    }
}

/// RK4 for `g' = g · A(t)` on `steps` uniform steps of `[0, 1]`.
pub fn develop<F>(rep: &MatrixRepresentation, a: F, steps: usize) -> MatrixGroupElement
where
    F: Fn(f64) -> DVector<f64>,
{
    let n = rep.size();
    let h = 1.0 / steps as f64;
    let mut g = DMatrix::identity(n, n);
    let mut a0 = rep.represent(&a(0.0));
    for k in 0..steps {
        let t = k as f64 * h;
        let am = rep.represent(&a(t + 0.5 * h));
        let a1 = rep.represent(&a(t + h));
        let k1 = &g * &a0;
        let k2 = (&g + &k1 * (0.5 * h)) * &am;
        let k3 = (&g + &k2 * (0.5 * h)) * &am;
        let k4 = (&g + &k3 * h) * &a1;
        g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if rep.orthogonal {
            g = project_orthogonal(&g);
        }
        a0 = a1;
    }
    MatrixGroupElement {
        matrix: g,
        orthogonal: rep.orthogonal,
    }
}

/// Development of a discretized path, interpolating the fiber cubically
/// between nodes.
pub fn development_map(rep: &MatrixRepresentation, p: &APath) -> Result<MatrixGroupElement> {
    rep.check_rank(p.rank())?;
    let h = p.grid().step();
    Ok(develop(rep, |t| interpolate(p.fiber(), h, t), p.grid().len() - 1))
}

/// Class of a path in one of the oracle groupoids.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleClass {
    Development(DMatrix<f64>),
    FiberwiseCotangent {
        base: DVector<f64>,
        covector: DVector<f64>,
    },
    PairGroupoid {
        source: DVector<f64>,
        target: DVector<f64>,
    },
}

impl OracleClass {
    /// Class of `concatenate(p, q)` from the classes of `p` and `q`.
    pub fn compose(p: &OracleClass, q: &OracleClass) -> Option<OracleClass> {
        use OracleClass::*;
        match (p, q) {
            (Development(gp), Development(gq)) => Some(Development(gq * gp)),
            (
                FiberwiseCotangent { covector: cp, .. },
                FiberwiseCotangent { base, covector: cq },
            ) => Some(FiberwiseCotangent {
                base: base.clone(),
                covector: cp + cq,
            }),
            (PairGroupoid { target, .. }, PairGroupoid { source, .. }) => Some(PairGroupoid {
                source: source.clone(),
                target: target.clone(),
            }),
            _ => None,
        }
    }

    pub fn inverse(&self) -> OracleClass {
        use OracleClass::*;
        match self {
            Development(g) => {
                let n = g.nrows();
                Development(
                    g.clone()
                        .try_inverse()
                        .unwrap_or_else(|| DMatrix::from_element(n, n, f64::NAN)),
                )
            }
            FiberwiseCotangent { base, covector } => FiberwiseCotangent {
                base: base.clone(),
                covector: -covector,
            },
            PairGroupoid { source, target } => PairGroupoid {
                source: target.clone(),
                target: source.clone(),
            },
        }
    }

    /// Max-entry distance; infinite between different variants.
    pub fn distance(&self, other: &OracleClass) -> f64 {
        use OracleClass::*;
        match (self, other) {
            (Development(a), Development(b)) if a.shape() == b.shape() => (a - b).amax(),
            (
                FiberwiseCotangent { base: x, covector: c },
                FiberwiseCotangent { base: y, covector: d },
            ) if x.len() == y.len() && c.len() == d.len() => {
                inf_norm(&(x - y)).max(inf_norm(&(c - d)))
            }
            (PairGroupoid { source: s, target: t }, PairGroupoid { source: u, target: v })
                if s.len() == u.len() =>
            {
                inf_norm(&(s - u)).max(inf_norm(&(t - v)))
            }
            _ => f64::INFINITY,
        }
    }
}

/// `(γ(0), ∫ a)` for the zero-bivector cotangent algebroid. The integral
/// uses the end-corrected trapezoid rule.
pub fn zero_poisson_class(alg: &Algebroid, p: &APath) -> Result<OracleClass> {
    if !alg.anchor_is_zero() || !alg.structure_is_zero() || alg.rank() != alg.dim() {
        return Err(OracleError::WrongAlgebroid(
            "expected the cotangent algebroid of the zero bivector".into(),
        ));
    }
    Ok(OracleClass::FiberwiseCotangent {
        base: p.source().clone(),
        covector: corrected_trapezoid(p.fiber(), p.grid().step()),
    })
}

/// `(γ(0), γ(1))` for the cotangent algebroid of a constant invertible
/// bivector.
pub fn pair_groupoid_class(alg: &Algebroid, p: &APath) -> Result<OracleClass> {
    check_symplectic_chart(alg)?;
    Ok(OracleClass::PairGroupoid {
        source: p.source().clone(),
        target: p.target().clone(),
    })
}

fn check_symplectic_chart(alg: &Algebroid) -> Result<()> {
    let n = alg.dim();
    if alg.rank() != n || !alg.structure_is_zero() {
        return Err(OracleError::WrongAlgebroid(
            "expected the cotangent algebroid of a constant bivector".into(),
        ));
    }
    for j in 0..n {
        for i in 0..n {
            if !alg.anchor_entry(j, i).is_constant() {
                return Err(OracleError::WrongAlgebroid("bivector is not constant".into()));
            }
        }
    }
    let centre: Vec<f64> = alg
        .chart()
        .lower()
        .iter()
        .zip(alg.chart().upper())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let rho = alg.anchor_at(&centre)?;
    let smallest = rho.singular_values().min();
    if n == 0 || !(smallest > 1e-12 * rho.amax().max(1.0)) {
        return Err(OracleError::Degenerate);
    }
    Ok(())
}

/// Which oracle groupoid to use.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    ZeroPoisson,
    SymplecticChart,
    Development(MatrixRepresentation),
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Oracle::ZeroPoisson => "zero-poisson",
            Oracle::SymplecticChart => "pair-groupoid",
            Oracle::Development(_) => "development",
        }
    }

    pub fn class(&self, alg: &Algebroid, p: &APath) -> Result<OracleClass> {
        match self {
            Oracle::ZeroPoisson => zero_poisson_class(alg, p),
            Oracle::SymplecticChart => pair_groupoid_class(alg, p),
            Oracle::Development(rep) => {
                Ok(OracleClass::Development(development_map(rep, p)?.matrix))
            }
        }
    }

    /// Class of the constant path at `x`.
    pub fn identity(&self, x: &DVector<f64>) -> OracleClass {
        match self {
            Oracle::ZeroPoisson => OracleClass::FiberwiseCotangent {
                base: x.clone(),
                covector: DVector::zeros(x.len()),
            },
            Oracle::SymplecticChart => OracleClass::PairGroupoid {
                source: x.clone(),
                target: x.clone(),
            },
            Oracle::Development(rep) => {
                OracleClass::Development(DMatrix::identity(rep.size(), rep.size()))
            }
        }
    }
}

/// Paths and families fed to [`check_oracle_functoriality`]. Each pair
/// `(p, q)` must satisfy `target(q) = source(p)`.
#[derive(Clone, Debug, Default)]
pub struct FunctorialitySuite {
    pub pairs: Vec<(A0Path, A0Path)>,
    pub families: Vec<PathFamily>,
}

/// Worst defects of the groupoid laws in the oracle codomain, plus the
/// agreement count of homotopy decisions with class equality.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctorialityReport {
    pub oracle: &'static str,
    pub pairs: usize,
    pub concat_defect: f64,
    pub inverse_defect: f64,
    pub identity_defect: f64,
    pub families: usize,
    pub agreements: usize,
    /// Largest `|b(·, 1)|` among families whose classes agree.
    pub homotopic_end: f64,
    pub class_tol: f64,
}

impl FunctorialityReport {
    pub fn all_agree(&self) -> bool {
        self.agreements == self.families
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let name = |s: &str| format!("{}/{}", self.oracle, s);
        vec![
            CheckRecord::below(name("concatenation"), self.concat_defect, self.class_tol),
            CheckRecord::below(name("reverse"), self.inverse_defect, self.class_tol),
            CheckRecord::below(name("constant"), self.identity_defect, self.class_tol),
            CheckRecord::below(
                name("decision-disagreements"),
                (self.families - self.agreements) as f64,
                0.5,
            ),
        ]
    }
}

/// Check `class(m̄(p, q)) = class(p)·class(q)`, `class(p⁻¹) = class(p)⁻¹`,
/// `class(1_x) = 1` on the suite pairs, and compare the homotopy decision
/// of every family (at `decision_tol`) with constancy of the class along it
/// (at `class_tol`).
pub fn check_oracle_functoriality(
    oracle: &Oracle,
    alg: &Algebroid,
    suite: &FunctorialitySuite,
    decision_tol: f64,
    class_tol: f64,
    exec: Execution,
) -> Result<FunctorialityReport> {
    let laws = exec.try_map_range(suite.pairs.len(), |i| {
        let (p, q) = &suite.pairs[i];
        let tol = crate::path::default_path_tol(p.grid());
        let (cp, cq) = (oracle.class(alg, p)?, oracle.class(alg, q)?);
        let pq = concatenate(alg, p, q, tol)?;
        let concat = match OracleClass::compose(&cp, &cq) {
            Some(expected) => oracle.class(alg, &pq)?.distance(&expected),
            None => f64::INFINITY,
        };
        let inverse = oracle.class(alg, &reverse(p))?.distance(&cp.inverse());
        let c = constant_path(alg, p.source().as_slice(), *p.grid())?;
        let identity = oracle.class(alg, &c)?.distance(&oracle.identity(p.source()));
        Ok::<_, OracleError>((concat, inverse, identity))
    })?;
    let decisions = exec.try_map_range(suite.families.len(), |i| {
        let fam = &suite.families[i];
        let c0 = oracle.class(alg, fam.first())?;
        let mut spread: f64 = 0.0;
        for s in fam.slices() {
            spread = spread.max(oracle.class(alg, s)?.distance(&c0));
        }
        let d = is_homotopic_along_family(alg, fam, decision_tol, Execution::Sequential)?;
        let equal = spread < class_tol;
        Ok::<_, OracleError>((d.homotopic == equal, if equal { d.max_end } else { 0.0 }))
    })?;
    let worst = |f: fn(&(f64, f64, f64)) -> f64| laws.iter().map(f).fold(0.0, f64::max);
    Ok(FunctorialityReport {
        oracle: oracle.name(),
        pairs: suite.pairs.len(),
        concat_defect: worst(|l| l.0),
        inverse_defect: worst(|l| l.1),
        identity_defect: worst(|l| l.2),
        families: suite.families.len(),
        agreements: decisions.iter().filter(|d| d.0).count(),
        homotopic_end: decisions.iter().map(|d| d.1).fold(0.0, f64::max),
        class_tol,
    })
}

/// Development endpoints of every slice, for invariance checks along a
/// family.
pub fn development_along_family(
    rep: &MatrixRepresentation,
    fam: &PathFamily,
    exec: Execution,
) -> Result<Vec<MatrixGroupElement>> {
    exec.try_map_range(fam.slices().len(), |j| development_map(rep, fam.slice(j)))
}

/// Sample a closed-form fiber curve on `grid`.
pub fn sample_curve<F: Fn(f64) -> DVector<f64>>(grid: &TimeGrid, f: F) -> Vec<DVector<f64>> {
    grid.nodes().map(f).collect()
}
