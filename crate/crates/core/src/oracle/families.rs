use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Rotation3, Vector3};
use rand::Rng;

use super::{develop, MatrixRepresentation};
use crate::algebroid::Algebroid;
use crate::exec::Execution;
use crate::expr::Expr;
use crate::path::numerics::trapezoid;
use crate::path::{Cutoff, EpsilonGrid, PathFamily, Result, SineCutoff, TimeGrid};
use crate::sampling::symmetric_vector;

/// `a(t) = τ'(t) (c0 + c1 cos πt + c2 sin πt)`, flat at both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatCurve {
    pub c: [DVector<f64>; 3],
}

impl FlatCurve {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize, amplitude: f64) -> Self {
        FlatCurve {
            c: std::array::from_fn(|_| DVector::from_vec(symmetric_vector(rng, rank, amplitude))),
        }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let s = SineCutoff.dtau(t);
        (&self.c[0] + &self.c[1] * (PI * t).cos() + &self.c[2] * (PI * t).sin()) * s
    }

    pub fn sample(&self, grid: &TimeGrid) -> Vec<DVector<f64>> {
        grid.nodes().map(|t| self.eval(t)).collect()
    }

    /// Exact `∫₀¹ a`.
    pub fn integral(&self) -> DVector<f64> {
        &self.c[0] + &self.c[2] * (8.0 / (3.0 * PI))
    }

    /// Same integral, different profile.
    pub fn with_same_integral<R: Rng + ?Sized>(&self, rng: &mut R, amplitude: f64) -> Self {
        let mut other = FlatCurve::random(rng, self.c[0].len(), amplitude);
        other.c[0] = self.integral() - &other.c[2] * (8.0 / (3.0 * PI));
        other
    }

    /// Same trapezoid sum on `grid`, different profile. The constant
    /// coefficient absorbs the difference, so the sums agree to rounding.
    pub fn with_same_trapezoid_sum<R: Rng + ?Sized>(&self, rng: &mut R, amplitude: f64, grid: &TimeGrid) -> Self {
        let mut other = FlatCurve::random(rng, self.c[0].len(), amplitude);
        other.c[0].fill(0.0);
        let h = grid.step();
        let rest = trapezoid(&other.sample(grid), h);
        let unit = trapezoid(&grid.nodes().map(|t| DVector::from_element(1, SineCutoff.dtau(t))).collect::<Vec<_>>(), h)[0];
        other.c[0] = (trapezoid(&self.sample(grid), h) - rest) / unit;
        other
    }

    pub fn scaled(&self, s: f64) -> Self {
        FlatCurve {
            c: std::array::from_fn(|i| &self.c[i] * s),
        }
    }
}

/// `a(ε, t) = (1 − ε) a0(t) + ε a1(t)`, defined for every real ε.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFamily {
    pub a0: FlatCurve,
    pub a1: FlatCurve,
}

impl LinearFamily {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize, amplitude: f64) -> Self {
        LinearFamily {
            a0: FlatCurve::random(rng, rank, amplitude),
            a1: FlatCurve::random(rng, rank, amplitude),
        }
    }

    pub fn eval(&self, eps: f64, t: f64) -> DVector<f64> {
        self.a0.eval(t) * (1.0 - eps) + self.a1.eval(t) * eps
    }

    pub fn fibers(&self, time: &TimeGrid, eps: &EpsilonGrid) -> Vec<Vec<DVector<f64>>> {
        eps.nodes()
            .map(|e| time.nodes().map(|t| self.eval(e, t)).collect())
            .collect()
    }

    /// The family over a point base (Lie algebra algebroids).
    pub fn over_point(
        &self,
        alg: &Algebroid,
        time: TimeGrid,
        eps: EpsilonGrid,
        exec: Execution,
    ) -> Result<PathFamily> {
        PathFamily::from_fibers(alg, &[], time, eps, self.fibers(&time, &eps), exec)
    }
}

/// Fiber of `G(ε, t) = exp(τ εθ N) exp(τ X) exp(ψ ε Y)` in so(3), with the
/// cutoff `τ` and `ψ = sin⁴ πt`. The endpoint `G(ε, 1) = exp(εθ N) exp(X)`
/// fixes `N`, so over so(3)* the base endpoints `G(ε,1)ᵀ x0` stay put when
/// `N ∥ x0`. For `θ = 0` the family is a homotopy.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationFamily {
    pub x: Vector3<f64>,
    pub y: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub theta: f64,
}

impl RotationFamily {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, axis: Vector3<f64>, theta: f64, amplitude: f64) -> Self {
        let v = |rng: &mut R| Vector3::from_vec(symmetric_vector(rng, 3, amplitude));
        RotationFamily {
            x: v(rng),
            y: v(rng),
            axis: axis.normalize(),
            theta,
        }
    }

    pub fn eval(&self, eps: f64, t: f64) -> DVector<f64> {
        let (tau, dtau) = (SineCutoff.tau(t), SineCutoff.dtau(t));
        let s = (PI * t).sin();
        let (psi, dpsi) = (s.powi(4), 4.0 * PI * s.powi(3) * (PI * t).cos());
        let b = Rotation3::new(self.x * tau);
        let c = Rotation3::new(self.y * (psi * eps));
        let a = (b * c).inverse() * (self.axis * (dtau * eps * self.theta))
            + c.inverse() * (self.x * dtau)
            + self.y * (eps * dpsi);
        DVector::from_column_slice(a.as_slice())
    }

    pub fn fibers(&self, time: &TimeGrid, eps: &EpsilonGrid) -> Vec<Vec<DVector<f64>>> {
        eps.nodes()
            .map(|e| time.nodes().map(|t| self.eval(e, t)).collect())
            .collect()
    }

    /// `G(ε, 1)`.
    pub fn endpoint(&self, eps: f64) -> DMatrix<f64> {
        let g = Rotation3::new(self.axis * (eps * self.theta)) * Rotation3::new(self.x);
        DMatrix::from_fn(3, 3, |r, c| g[(r, c)])
    }

    /// `G⁻¹ ∂_ε G` at `t = 1`, the same for every ε.
    pub fn end_field(&self) -> DVector<f64> {
        let v = Rotation3::new(self.x).inverse() * (self.axis * self.theta);
        DVector::from_column_slice(v.as_slice())
    }

    /// The family with base curves solved from `x0` (an so(3)* cotangent
    /// algebroid, `axis ∥ x0`) or over a point (the Lie algebra).
    pub fn family(
        &self,
        alg: &Algebroid,
        x0: &[f64],
        time: TimeGrid,
        eps: EpsilonGrid,
        exec: Execution,
    ) -> Result<PathFamily> {
        PathFamily::from_fibers(alg, x0, time, eps, self.fibers(&time, &eps), exec)
    }
}

/// `g(ε, 1)⁻¹ ∂_ε g(ε, 1)` at every ε-node, with `g` developed on `steps`
/// RK4 steps from the closed-form fiber and `∂_ε` by five-point central
/// differences (the family is evaluated just outside `[0, 1]` at the ends).
pub fn log_derivative_oracle<F>(
    rep: &MatrixRepresentation,
    fiber: F,
    eps: &EpsilonGrid,
    steps: usize,
    exec: Execution,
) -> Vec<DVector<f64>>
where
    F: Fn(f64, f64) -> DVector<f64> + Sync,
{
    let he = eps.step();
    exec.map_range(eps.len(), |j| {
        let e = eps.node(j);
        let g = |d: f64| develop(rep, |t| fiber(e + d * he, t), steps).matrix;
        let dg = (g(-2.0) - g(-1.0) * 8.0 + g(1.0) * 8.0 - g(2.0)) / (12.0 * he);
        let g0 = g(0.0);
        let inv = if rep.is_orthogonal() {
            g0.transpose()
        } else {
            g0.try_inverse().unwrap_or_else(|| DMatrix::from_element(3, 3, f64::NAN))
        };
        rep.coordinates(&(inv * dg))
    })
}

/// Christoffel symbols `Γ[m][k][l]` with polynomial entries of degree ≤ 2.
pub fn random_connection<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
    amplitude: f64,
) -> Vec<Vec<Vec<Expr>>> {
    let entry = |rng: &mut R| {
        let mut terms = vec![Expr::num(rng.random_range(-amplitude..amplitude))];
        for m in 0..dim {
            terms.push(Expr::num(rng.random_range(-amplitude..amplitude)) * Expr::var(m));
        }
        if dim > 0 {
            let (p, q) = (rng.random_range(0..dim), rng.random_range(0..dim));
            terms.push(
                Expr::num(rng.random_range(-amplitude..amplitude)) * Expr::var(p) * Expr::var(q),
            );
        }
        Expr::sum(terms)
    };
    (0..dim)
        .map(|_| {
            (0..rank)
                .map(|_| (0..rank).map(|_| entry(rng)).collect())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::numerics::corrected_trapezoid;
    use crate::sampling::rng_from_seed;

    #[test]
    fn flat_curve_integral_is_exact() {
        let mut rng = rng_from_seed(3);
        let c = FlatCurve::random(&mut rng, 2, 1.0);
        let grid = TimeGrid::new(1025).unwrap();
        let q = corrected_trapezoid(&c.sample(&grid), grid.step());
        assert!((q - c.integral()).amax() < 1e-10);
        let d = c.with_same_integral(&mut rng, 1.0);
        assert!((d.integral() - c.integral()).amax() < 1e-14);
        assert!((d.c[2].clone() - c.c[2].clone()).amax() > 1e-3);
    }

    #[test]
    fn matched_trapezoid_sums() {
        let mut rng = rng_from_seed(4);
        let grid = TimeGrid::new(129).unwrap();
        let c = FlatCurve::random(&mut rng, 3, 1.0);
        let d = c.with_same_trapezoid_sum(&mut rng, 1.0, &grid);
        let (tc, td) = (trapezoid(&c.sample(&grid), grid.step()), trapezoid(&d.sample(&grid), grid.step()));
        assert!((tc - td).amax() < 1e-14);
        assert!((d.c[1].clone() - c.c[1].clone()).amax() > 1e-3);
    }

    #[test]
    fn rotation_family_closed_forms() {
        let mut rng = rng_from_seed(5);
        let fam = RotationFamily::random(&mut rng, Vector3::new(0.3, -0.2, 0.9), 0.7, 1.0);
        let rep = MatrixRepresentation::so3();
        for e in [0.0, 0.4, 1.0] {
            let g = develop(&rep, |t| fam.eval(e, t), 512).matrix;
            assert!((g - fam.endpoint(e)).amax() < 1e-9);
        }
        assert!(fam.eval(0.3, 0.0).amax() < 1e-15);
        assert!(fam.eval(0.3, 1.0).amax() < 1e-12);
        let eps = EpsilonGrid::new(33).unwrap();
        let b = log_derivative_oracle(&rep, |e, t| fam.eval(e, t), &eps, 512, Execution::Parallel);
        for v in b {
            assert!((v - fam.end_field()).amax() < 1e-7);
        }
    }

    #[test]
    fn connection_shape() {
        let mut rng = rng_from_seed(9);
        let g = random_connection(&mut rng, 3, 3, 0.5);
        assert_eq!((g.len(), g[0].len(), g[0][0].len()), (3, 3, 3));
        assert!(g.iter().flatten().flatten().all(|e| e.max_var().is_none_or(|m| m < 3)));
    }
}
