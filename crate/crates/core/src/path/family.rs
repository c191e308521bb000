use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::numerics::{derivative, inf_norm, interpolate};
use super::{
    default_path_tol, solve_base_path, to_rows, to_vectors, validate_apath, A0Path, APath,
    EpsilonGrid, GridData, PathError, Result, TimeGrid,
};
use crate::algebroid::{Algebroid, FieldValues};
use crate::exec::Execution;

/// JSON form of a family; `base[j][k]` is `γ(ε_j, t_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyData {
    pub grid: GridData,
    pub base: Vec<Vec<Vec<f64>>>,
    pub fiber: Vec<Vec<Vec<f64>>>,
}

/// A-paths `a(ε_j, ·)` over a common time grid, one per node of an ε-grid,
/// all starting at the same base point.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFamily {
    eps: EpsilonGrid,
    slices: Vec<APath>,
}

impl PathFamily {
    /// Validates every slice as an A-path at `tol` and checks that the
    /// source does not move with ε. Fixed targets are only required by
    /// [`is_homotopic_along_family`].
    pub fn new(alg: &Algebroid, eps: EpsilonGrid, slices: Vec<APath>, tol: f64) -> Result<Self> {
        if slices.len() != eps.len() {
            return Err(PathError::Shape(format!(
                "{} slices for {} ε-nodes",
                slices.len(),
                eps.len()
            )));
        }
        let grid = *slices[0].grid();
        if slices.iter().any(|s| *s.grid() != grid) {
            return Err(PathError::GridMismatch);
        }
        for s in &slices {
            let r = validate_apath(alg, s, tol)?;
            if !(r.max_residual < tol) || !r.in_chart {
                return Err(PathError::NotAnAPath {
                    residual: r.max_residual,
                    tol,
                    node: r.worst_node,
                });
            }
        }
        let drift = slices
            .iter()
            .map(|s| inf_norm(&(s.source() - slices[0].source())))
            .fold(0.0, f64::max);
        if !(drift < tol) {
            return Err(PathError::EndpointsNotFixed { drift, tol });
        }
        Ok(PathFamily { eps, slices })
    }

    /// Solve the base curve of every slice from `x0`; `fibers[j]` is the
    /// fiber curve of slice `j`.
    pub fn from_fibers(
        alg: &Algebroid,
        x0: &[f64],
        time: TimeGrid,
        eps: EpsilonGrid,
        fibers: Vec<Vec<DVector<f64>>>,
        exec: Execution,
    ) -> Result<Self> {
        if fibers.len() != eps.len() {
            return Err(PathError::Shape(format!(
                "{} fiber curves for {} ε-nodes",
                fibers.len(),
                eps.len()
            )));
        }
        let slices = exec.try_map_range(fibers.len(), |j| {
            solve_base_path(alg, x0, fibers[j].clone(), time)
        })?;
        PathFamily::new(alg, eps, slices, default_path_tol(&time))
    }

    pub fn from_data(alg: &Algebroid, data: FamilyData) -> Result<Self> {
        let time = TimeGrid::new(data.grid.n_t)?;
        let n_eps = data
            .grid
            .n_eps
            .ok_or_else(|| PathError::Shape("family grid needs n_eps".into()))?;
        let eps = EpsilonGrid::new(n_eps)?;
        if data.base.len() != n_eps || data.fiber.len() != n_eps {
            return Err(PathError::Shape(format!(
                "expected {n_eps} slices, got {} base and {} fiber",
                data.base.len(),
                data.fiber.len()
            )));
        }
        let slices = data
            .base
            .into_iter()
            .zip(data.fiber)
            .map(|(b, f)| APath::new(time, to_vectors(b), to_vectors(f)))
            .collect::<Result<Vec<_>>>()?;
        PathFamily::new(alg, eps, slices, default_path_tol(&time))
    }

    pub fn to_data(&self) -> FamilyData {
        FamilyData {
            grid: GridData {
                n_t: self.time().len(),
                n_eps: Some(self.eps.len()),
            },
            base: self.slices.iter().map(|s| to_rows(s.base())).collect(),
            fiber: self.slices.iter().map(|s| to_rows(s.fiber())).collect(),
        }
    }

    pub fn time(&self) -> &TimeGrid {
        self.slices[0].grid()
    }

    pub fn eps(&self) -> &EpsilonGrid {
        &self.eps
    }

    pub fn slices(&self) -> &[APath] {
        &self.slices
    }

    pub fn slice(&self, j: usize) -> &APath {
        &self.slices[j]
    }

    pub fn first(&self) -> &APath {
        &self.slices[0]
    }

    pub fn last(&self) -> &APath {
        &self.slices[self.slices.len() - 1]
    }

    /// `max_j |γ(ε_j, 1) − γ(0, 1)|∞`.
    pub fn target_drift(&self) -> f64 {
        let t0 = self.first().target();
        self.slices
            .iter()
            .map(|s| inf_norm(&(s.target() - t0)))
            .fold(0.0, f64::max)
    }

    /// `∂_ε a` and `∂_ε γ` at every node, indexed `[j][k]`.
    pub fn eps_derivatives(&self, exec: Execution) -> (Vec<Vec<DVector<f64>>>, Vec<Vec<DVector<f64>>>) {
        let he = self.eps.step();
        let n_t = self.time().len();
        let columns = exec.map_range(n_t, |k| {
            let a: Vec<_> = self.slices.iter().map(|s| s.fiber()[k].clone()).collect();
            let g: Vec<_> = self.slices.iter().map(|s| s.base()[k].clone()).collect();
            (derivative(&a, he), derivative(&g, he))
        });
        let n_e = self.eps.len();
        let mut da = vec![Vec::with_capacity(n_t); n_e];
        let mut dg = vec![Vec::with_capacity(n_t); n_e];
        for (ca, cg) in columns {
            for (j, (x, y)) in ca.into_iter().zip(cg).enumerate() {
                da[j].push(x);
                dg[j].push(y);
            }
        }
        (da, dg)
    }
}

/// Solution `b(ε_j, t_k)` of the homotopy equation.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyField {
    values: Vec<Vec<DVector<f64>>>,
}

impl HomotopyField {
    pub fn at(&self, j: usize, k: usize) -> &DVector<f64> {
        &self.values[j][k]
    }

    pub fn slice(&self, j: usize) -> &[DVector<f64>] {
        &self.values[j]
    }

    pub fn n_eps(&self) -> usize {
        self.values.len()
    }

    pub fn n_t(&self) -> usize {
        self.values[0].len()
    }

    /// `b(ε_j, 1)` for every j.
    pub fn end_values(&self) -> Vec<DVector<f64>> {
        self.values.iter().map(|s| s[s.len() - 1].clone()).collect()
    }

    /// `ε_j ↦ |b(ε_j, 1)|∞`.
    pub fn end_profile(&self) -> Vec<f64> {
        self.values.iter().map(|s| inf_norm(&s[s.len() - 1])).collect()
    }

    pub fn max_end_norm(&self) -> f64 {
        self.end_profile().into_iter().fold(0.0, f64::max)
    }

    /// Largest nodewise difference to another field on the same grid.
    pub fn max_difference(&self, other: &HomotopyField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| inf_norm(&(u - v))))
            .fold(0.0, f64::max)
    }
}

// ∂_t b = ∂_ε a + Γ(∂_ε γ) a − Γ(ρ a) b + T(b, a), which is the covariant
// equation ∇_t b − ∇_ε a = T(b, a). With Γ = 0 it reads ∂_t b − ∂_ε a = [b, a].
fn rhs(
    f: &FieldValues,
    a: &DVector<f64>,
    da: &DVector<f64>,
    dg: &DVector<f64>,
    b: &DVector<f64>,
) -> DVector<f64> {
    let mut out = da + f.torsion(b, a);
    if f.christoffel.is_some() {
        out += f.christoffel_action(dg, a);
        out -= f.christoffel_action(&(&f.anchor * a), b);
    }
    out
}

/// Integrate the homotopy equation along every ε-slice by RK4 with
/// `b(ε, 0) = 0`. `∂_ε a` and `∂_ε γ` are computed first in a read-only
/// pass; slices are then independent.
pub fn solve_homotopy_equation(
    alg: &Algebroid,
    fam: &PathFamily,
    exec: Execution,
) -> Result<HomotopyField> {
    let first = fam.first();
    if first.base_dim() != alg.dim() || first.rank() != alg.rank() {
        return Err(PathError::Shape("family does not match the algebroid".into()));
    }
    let (da, dg) = fam.eps_derivatives(exec);
    let time = *fam.time();
    let h = time.step();
    let values = exec.try_map_range(fam.eps.len(), |j| {
        let slice = fam.slice(j);
        let (a, g) = (slice.fiber(), slice.base());
        let (da, dg) = (&da[j], &dg[j]);
        let mut b = Vec::with_capacity(time.len());
        b.push(DVector::zeros(alg.rank()));
        let mut here = alg.fields_at(g[0].as_slice())?;
        for k in 0..time.len() - 1 {
            let tm = time.node(k) + 0.5 * h;
            let mid = alg.fields_at(interpolate(g, h, tm).as_slice())?;
            let (am, dam, dgm) = (interpolate(a, h, tm), interpolate(da, h, tm), interpolate(dg, h, tm));
            let next = alg.fields_at(g[k + 1].as_slice())?;
            let bk = &b[k];
            let k1 = rhs(&here, &a[k], &da[k], &dg[k], bk);
            let k2 = rhs(&mid, &am, &dam, &dgm, &(bk + &k1 * (0.5 * h)));
            let k3 = rhs(&mid, &am, &dam, &dgm, &(bk + &k2 * (0.5 * h)));
            let k4 = rhs(&next, &a[k + 1], &da[k + 1], &dg[k + 1], &(bk + &k3 * h));
            let bn = bk + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            if bn.iter().any(|v| !v.is_finite()) {
                return Err(PathError::NonFinite { slice: j });
            }
            b.push(bn);
            here = next;
        }
        Ok(b)
    })?;
    Ok(HomotopyField { values })
}

/// Outcome of the homotopy test along one family.
#[derive(Clone, Debug)]
pub struct HomotopyDecision {
    pub homotopic: bool,
    /// `max_ε |b(ε, 1)|∞`.
    pub max_end: f64,
    pub profile: Vec<f64>,
    pub tol: f64,
    pub field: HomotopyField,
}

/// The family's extreme slices are homotopic iff `b(·, 1)` vanishes to `tol`.
/// Families whose target moves with ε are rejected before solving.
pub fn is_homotopic_along_family(
    alg: &Algebroid,
    fam: &PathFamily,
    tol: f64,
    exec: Execution,
) -> Result<HomotopyDecision> {
    let drift = fam.target_drift();
    let drift_tol = default_path_tol(fam.time());
    if !(drift < drift_tol) {
        return Err(PathError::EndpointsNotFixed {
            drift,
            tol: drift_tol,
        });
    }
    let field = solve_homotopy_equation(alg, fam, exec)?;
    let profile = field.end_profile();
    let max_end = profile.iter().copied().fold(0.0, f64::max);
    Ok(HomotopyDecision {
        homotopic: max_end < tol,
        max_end,
        profile,
        tol,
        field,
    })
}

/// Linear interpolation `(1 − ε) a_p + ε a_q` over a fixed base. Only
/// available when the base is a point or the anchor vanishes along both
/// paths; otherwise the interpolated slices would not be A-paths.
pub fn default_family(
    alg: &Algebroid,
    p: &A0Path,
    q: &A0Path,
    eps: EpsilonGrid,
) -> Result<PathFamily> {
    if p.grid() != q.grid() {
        return Err(PathError::GridMismatch);
    }
    let tol = default_path_tol(p.grid());
    for (x, y) in [(p.source(), q.source()), (p.target(), q.target())] {
        let distance = inf_norm(&(x - y));
        if !(distance < tol) {
            return Err(PathError::EndpointMismatch { distance, tol });
        }
    }
    if alg.dim() > 0 {
        for x in p.base().iter().chain(q.base()) {
            if alg.anchor_at(x.as_slice())?.amax() != 0.0 {
                return Err(PathError::NoDefaultFamily(
                    "the anchor does not vanish along the paths".into(),
                ));
            }
        }
    }
    let slices = eps
        .nodes()
        .map(|e| {
            let fiber = p
                .fiber()
                .iter()
                .zip(q.fiber())
                .map(|(u, v)| u * (1.0 - e) + v * e)
                .collect();
            APath::new(*p.grid(), p.base().to_vec(), fiber)
        })
        .collect::<Result<Vec<_>>>()?;
    PathFamily::new(alg, eps, slices, tol)
}

/// For each fixed `t_k`, the A-path residual of `ε ↦ b(ε, t_k)` over
/// `ε ↦ γ(ε, t_k)`, maximized over k.
pub fn check_intermediate_slices(
    alg: &Algebroid,
    fam: &PathFamily,
    field: &HomotopyField,
    exec: Execution,
) -> Result<f64> {
    let he = fam.eps.step();
    let per_t = exec.try_map_range(fam.time().len(), |k| {
        let g: Vec<_> = fam.slices.iter().map(|s| s.base()[k].clone()).collect();
        let dg = derivative(&g, he);
        let mut worst: f64 = 0.0;
        for j in 0..g.len() {
            let rho = alg.anchor_at(g[j].as_slice())?;
            worst = worst.max(inf_norm(&(rho * field.at(j, k) - &dg[j])));
        }
        Ok::<_, PathError>(worst)
    })?;
    Ok(per_t.into_iter().fold(0.0, f64::max))
}
