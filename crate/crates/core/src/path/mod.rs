//! Discretized A-paths and the groupoid operations on them.
//!
//! An A-path is a fiber curve `a(t)` over a base curve `γ(t)` with
//! `ρ(γ) a = γ'`. A₀-paths additionally have `a` and `a'` vanishing at both
//! ends, which is what makes concatenation smooth. The source of a path is
//! `γ(0)` and its target `γ(1)`; the product `concatenate(p, q)` is defined
//! when `target(q) = source(p)` and runs through `q` first.

mod family;
mod grid;
pub mod numerics;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebroid::{Algebroid, AlgebroidError};
use numerics::{derivative, derivative_at, interpolate};

pub use family::{
    check_intermediate_slices, default_family, is_homotopic_along_family,
    solve_homotopy_equation, FamilyData, HomotopyDecision, HomotopyField, PathFamily,
};
pub use grid::{default_homotopy_tol, default_path_tol, EpsilonGrid, TimeGrid, UniformGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("grid has {nodes} nodes, at least {min} are required")]
    GridTooCoarse { nodes: usize, min: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("point {0:?} lies outside the chart")]
    OutsideChart(Vec<f64>),
    #[error("base trajectory leaves the chart at t = {time}")]
    ExitsChart { time: f64 },
    #[error("not an A-path: residual {residual:e} exceeds {tol:e} at node {node}")]
    NotAnAPath { residual: f64, tol: f64, node: usize },
    #[error("not an A0-path: boundary value {boundary:e} exceeds {tol:e}")]
    NotA0 { boundary: f64, tol: f64 },
    #[error("paths are not composable: endpoint distance {distance:e} exceeds {tol:e}")]
    EndpointMismatch { distance: f64, tol: f64 },
    #[error("paths live on different grids")]
    GridMismatch,
    #[error("base endpoints move by {drift:e} across the family (tolerance {tol:e})")]
    EndpointsNotFixed { drift: f64, tol: f64 },
    #[error("non-finite value while integrating slice {slice}")]
    NonFinite { slice: usize },
    #[error("no default family: {0}")]
    NoDefaultFamily(String),
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
}

pub type Result<T> = std::result::Result<T, PathError>;

fn to_vectors(rows: Vec<Vec<f64>>) -> Vec<DVector<f64>> {
    rows.into_iter().map(DVector::from_vec).collect()
}

fn to_rows(v: &[DVector<f64>]) -> Vec<Vec<f64>> {
    v.iter().map(|x| x.as_slice().to_vec()).collect()
}

/// Serialized grid header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridData {
    pub n_t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eps: Option<usize>,
}

/// JSON form of a path: `{grid: {n_t}, base: [[...]], fiber: [[...]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathData {
    pub grid: GridData,
    pub base: Vec<Vec<f64>>,
    pub fiber: Vec<Vec<f64>>,
}

/// Base and fiber values at the nodes of a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct APath {
    grid: TimeGrid,
    base: Vec<DVector<f64>>,
    fiber: Vec<DVector<f64>>,
}

impl APath {
    /// Shape-checked constructor; use [`validate_apath`] for the A-path
    /// condition itself.
    pub fn new(grid: TimeGrid, base: Vec<DVector<f64>>, fiber: Vec<DVector<f64>>) -> Result<Self> {
        let n = grid.len();
        if base.len() != n || fiber.len() != n {
            return Err(PathError::Shape(format!(
                "expected {n} nodes, got {} base and {} fiber values",
                base.len(),
                fiber.len()
            )));
        }
        let (bd, fd) = (base[0].len(), fiber[0].len());
        if base.iter().any(|b| b.len() != bd) || fiber.iter().any(|f| f.len() != fd) {
            return Err(PathError::Shape("ragged node values".into()));
        }
        Ok(APath { grid, base, fiber })
    }

    pub fn from_data(data: PathData) -> Result<Self> {
        let grid = TimeGrid::new(data.grid.n_t)?;
        APath::new(grid, to_vectors(data.base), to_vectors(data.fiber))
    }

    pub fn to_data(&self) -> PathData {
        PathData {
            grid: GridData {
                n_t: self.grid.len(),
                n_eps: None,
            },
            base: to_rows(&self.base),
            fiber: to_rows(&self.fiber),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn base(&self) -> &[DVector<f64>] {
        &self.base
    }

    pub fn fiber(&self) -> &[DVector<f64>] {
        &self.fiber
    }

    pub fn base_dim(&self) -> usize {
        self.base[0].len()
    }

    pub fn rank(&self) -> usize {
        self.fiber[0].len()
    }

    pub fn source(&self) -> &DVector<f64> {
        &self.base[0]
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.base[self.base.len() - 1]
    }

    fn check_against(&self, alg: &Algebroid) -> Result<()> {
        if self.base_dim() != alg.dim() || self.rank() != alg.rank() {
            return Err(PathError::Shape(format!(
                "path has base dimension {} and rank {}, algebroid has {} and {}",
                self.base_dim(),
                self.rank(),
                alg.dim(),
                alg.rank()
            )));
        }
        Ok(())
    }
}

/// An [`APath`] whose fiber and its derivative vanish at both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct A0Path(APath);

impl A0Path {
    /// Validate `path` as an A₀-path of `alg` at tolerance `tol`.
    pub fn new(alg: &Algebroid, path: APath, tol: f64) -> Result<Self> {
        let report = validate_apath(alg, &path, tol)?;
        if report.max_residual >= tol || !report.in_chart {
            return Err(PathError::NotAnAPath {
                residual: report.max_residual,
                tol,
                node: report.worst_node,
            });
        }
        if report.boundary >= tol {
            return Err(PathError::NotA0 {
                boundary: report.boundary,
                tol,
            });
        }
        Ok(A0Path(path))
    }

    pub fn path(&self) -> &APath {
        &self.0
    }

    pub fn into_path(self) -> APath {
        self.0
    }
}

impl std::ops::Deref for A0Path {
    type Target = APath;
    fn deref(&self) -> &APath {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathClass {
    A0Path,
    APath,
    Invalid,
}

/// Residuals of the A-path condition and the boundary flatness data.
#[derive(Clone, Debug, PartialEq)]
pub struct PathReport {
    /// `max_k |ρ(γ_k) a_k − γ'(t_k)|∞`.
    pub max_residual: f64,
    pub worst_node: usize,
    /// Per-node residuals.
    pub residuals: Vec<f64>,
    /// `max(|a(0)|, |a(1)|, |a'(0)|, |a'(1)|)`.
    pub boundary: f64,
    pub in_chart: bool,
    pub class: PathClass,
    pub tol: f64,
}

/// Check `ρ(γ) a = γ'` at every node (derivatives by finite differences)
/// and classify the path.
pub fn validate_apath(alg: &Algebroid, p: &APath, tol: f64) -> Result<PathReport> {
    p.check_against(alg)?;
    let h = p.grid.step();
    let velocity = derivative(&p.base, h);
    let mut residuals = Vec::with_capacity(p.grid.len());
    for k in 0..p.grid.len() {
        let rho = alg.anchor_at(p.base[k].as_slice())?;
        let r = &rho * &p.fiber[k] - &velocity[k];
        residuals.push(numerics::inf_norm(&r));
    }
    let (mut worst_node, mut max_residual) = (0, 0.0);
    for (k, &r) in residuals.iter().enumerate() {
        if r.is_nan() || r > max_residual {
            worst_node = k;
            max_residual = r;
        }
    }
    let n = p.grid.len();
    let boundary = [
        numerics::inf_norm(&p.fiber[0]),
        numerics::inf_norm(&p.fiber[n - 1]),
        numerics::inf_norm(&derivative_at(&p.fiber, h, 0)),
        numerics::inf_norm(&derivative_at(&p.fiber, h, n - 1)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let in_chart = p.base.iter().all(|x| alg.chart().contains(x.as_slice()));
    let class = if !(max_residual < tol) || !in_chart {
        PathClass::Invalid
    } else if boundary < tol {
        PathClass::A0Path
    } else {
        PathClass::APath
    };
    Ok(PathReport {
        max_residual,
        worst_node,
        residuals,
        boundary,
        in_chart,
        class,
        tol,
    })
}

/// Integrate `γ' = ρ(γ) a(t)` from `x0` with classical RK4; `a` is
/// interpolated between nodes by cubic Lagrange interpolation.
pub fn solve_base_path(
    alg: &Algebroid,
    x0: &[f64],
    fiber: Vec<DVector<f64>>,
    grid: TimeGrid,
) -> Result<APath> {
    if fiber.len() != grid.len() {
        return Err(PathError::Shape(format!(
            "fiber curve has {} nodes, grid has {}",
            fiber.len(),
            grid.len()
        )));
    }
    if x0.len() != alg.dim() || fiber.iter().any(|a| a.len() != alg.rank()) {
        return Err(PathError::Shape(
            "initial point or fiber values do not match the algebroid".into(),
        ));
    }
    if !alg.chart().contains(x0) {
        return Err(PathError::OutsideChart(x0.to_vec()));
    }
    let h = grid.step();
    let velocity = |x: &DVector<f64>, a: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(alg.anchor_at(x.as_slice())? * a)
    };
    let mut base = Vec::with_capacity(grid.len());
    base.push(DVector::from_column_slice(x0));
    for k in 0..grid.len() - 1 {
        let g = &base[k];
        let mid = interpolate(&fiber, h, grid.node(k) + 0.5 * h);
        let k1 = velocity(g, &fiber[k])?;
        let k2 = velocity(&(g + &k1 * (0.5 * h)), &mid)?;
        let k3 = velocity(&(g + &k2 * (0.5 * h)), &mid)?;
        let k4 = velocity(&(g + &k3 * h), &fiber[k + 1])?;
        let next = g + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !alg.chart().contains(next.as_slice()) {
            return Err(PathError::ExitsChart {
                time: grid.node(k + 1),
            });
        }
        base.push(next);
    }
    APath::new(grid, base, fiber)
}

/// Smooth increasing bijection `τ` of `[0, 1]` with `τ'(0) = τ'(1) = 0`.
pub trait Cutoff: Sync {
    fn tau(&self, t: f64) -> f64;
    fn dtau(&self, t: f64) -> f64;
}

/// `τ(t) = t − sin(2πt) / 2π`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SineCutoff;

impl Cutoff for SineCutoff {
    fn tau(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        t - (TAU * t).sin() / TAU
    }

    fn dtau(&self, t: f64) -> f64 {
        1.0 - (std::f64::consts::TAU * t).cos()
    }
}

/// The path `t ↦ τ'(t) a(τ(t))` over `γ(τ(t))`, on the same grid.
pub fn reparametrize_to_a0(
    alg: &Algebroid,
    p: &APath,
    cutoff: &dyn Cutoff,
    tol: f64,
) -> Result<A0Path> {
    p.check_against(alg)?;
    let h = p.grid.step();
    let mut base = Vec::with_capacity(p.grid.len());
    let mut fiber = Vec::with_capacity(p.grid.len());
    for t in p.grid.nodes() {
        let s = cutoff.tau(t);
        base.push(interpolate(&p.base, h, s));
        fiber.push(interpolate(&p.fiber, h, s) * cutoff.dtau(t));
    }
    A0Path::new(alg, APath::new(p.grid, base, fiber)?, tol)
}

/// Product `m̄(p, q)`: `q` at double speed on `[0, 1/2]`, then `p`, on a
/// grid of `2 n_t − 1` nodes.
pub fn concatenate(alg: &Algebroid, p: &A0Path, q: &A0Path, tol: f64) -> Result<A0Path> {
    if p.grid != q.grid {
        return Err(PathError::GridMismatch);
    }
    let distance = numerics::inf_norm(&(q.target() - p.source()));
    if !(distance < tol) {
        return Err(PathError::EndpointMismatch { distance, tol });
    }
    let n = p.grid.len();
    let mut base = Vec::with_capacity(2 * n - 1);
    let mut fiber = Vec::with_capacity(2 * n - 1);
    for k in 0..n {
        base.push(q.base[k].clone());
        fiber.push(&q.fiber[k] * 2.0);
    }
    for k in 1..n {
        base.push(p.base[k].clone());
        fiber.push(&p.fiber[k] * 2.0);
    }
    let grid = p.grid.refined();
    let path = APath::new(grid, base, fiber)?;
    // Doubling the speed doubles residuals and quadruples end derivatives.
    let mut tol_fine = tol.max(default_path_tol(&grid));
    for input in [p, q] {
        let r = validate_apath(alg, input, tol)?;
        tol_fine = tol_fine.max(2.0 * r.max_residual).max(4.0 * r.boundary);
    }
    A0Path::new(alg, path, tol_fine * (1.0 + 1e-9))
}

/// `t ↦ −a(1 − t)` over `γ(1 − t)`.
pub fn reverse(p: &A0Path) -> A0Path {
    let base = p.base.iter().rev().cloned().collect();
    let fiber = p.fiber.iter().rev().map(|a| -a).collect();
    A0Path(APath {
        grid: p.grid,
        base,
        fiber,
    })
}

/// Constant base `x`, zero fiber.
pub fn constant_path(alg: &Algebroid, x: &[f64], grid: TimeGrid) -> Result<A0Path> {
    if x.len() != alg.dim() {
        return Err(PathError::Shape(format!(
            "point has dimension {}, chart has {}",
            x.len(),
            alg.dim()
        )));
    }
    if !alg.chart().contains(x) {
        return Err(PathError::OutsideChart(x.to_vec()));
    }
    let base = vec![DVector::from_column_slice(x); grid.len()];
    let fiber = vec![DVector::zeros(alg.rank()); grid.len()];
    Ok(A0Path(APath { grid, base, fiber }))
}

/// `(γ(0), γ(1))`.
pub fn path_source_target(p: &APath) -> (DVector<f64>, DVector<f64>) {
    (p.source().clone(), p.target().clone())
}
