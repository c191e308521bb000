//! Finite-difference stencils, interpolation and quadrature on uniform grids.

use nalgebra::DVector;

/// Derivative of grid data at node `k` with spacing `h`: fourth-order
/// central differences inside and fourth-order one-sided differences at the
/// two nodes next to each end. Grids with fewer than five nodes fall back
/// to the second-order stencils.
pub fn derivative_at(values: &[DVector<f64>], h: f64, k: usize) -> DVector<f64> {
    let n = values.len();
    // (first node, weights, denominator); the weights sum to zero, so the
    // stencil is applied to differences from node k and constants give 0.
    let (first, weights, denom): (usize, &[f64], f64) = if n < 5 {
        match k {
            0 => (0, &[-3.0, 4.0, -1.0], 2.0),
            k if k == n - 1 => (n - 3, &[1.0, -4.0, 3.0], 2.0),
            k => (k - 1, &[-1.0, 0.0, 1.0], 2.0),
        }
    } else {
        match k {
            0 => (0, &[-25.0, 48.0, -36.0, 16.0, -3.0], 12.0),
            1 => (0, &[-3.0, -10.0, 18.0, -6.0, 1.0], 12.0),
            k if k == n - 2 => (n - 5, &[-1.0, 6.0, -18.0, 10.0, 3.0], 12.0),
            k if k == n - 1 => (n - 5, &[3.0, -16.0, 36.0, -48.0, 25.0], 12.0),
            k => (k - 2, &[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        }
    };
    let mut out = DVector::zeros(values[k].len());
    for (i, w) in weights.iter().enumerate() {
        let j = first + i;
        if j != k && *w != 0.0 {
            out += (&values[j] - &values[k]) * *w;
        }
    }
    out / (denom * h)
}

/// Derivative at every node.
pub fn derivative(values: &[DVector<f64>], h: f64) -> Vec<DVector<f64>> {
    (0..values.len()).map(|k| derivative_at(values, h, k)).collect()
}

/// Lagrange interpolation through the four nodes nearest to `t` (three on
/// a three-node grid). Exact at nodes.
pub fn interpolate(values: &[DVector<f64>], h: f64, t: f64) -> DVector<f64> {
    let n = values.len();
    let s = t / h;
    let nearest = s.round();
    if (s - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < n {
        return values[nearest as usize].clone();
    }
    let m = n.min(4);
    let start = (s.floor() as isize - 1).clamp(0, (n - m) as isize) as usize;
    let mut out = DVector::zeros(values[0].len());
    for i in start..start + m {
        let mut w = 1.0;
        for j in start..start + m {
            if j != i {
                w *= (s - j as f64) / (i as f64 - j as f64);
            }
        }
        out += &values[i] * w;
    }
    out
}

/// Trapezoid rule with the Euler–Maclaurin end correction
/// `-(h²/12) (f'(1) - f'(0))`, the end derivatives taken from the one-sided
/// stencils of [`derivative_at`].
pub fn corrected_trapezoid(values: &[DVector<f64>], h: f64) -> DVector<f64> {
    let n = values.len();
    let mut sum = DVector::zeros(values[0].len());
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += v * (w * h);
    }
    let d0 = derivative_at(values, h, 0);
    let d1 = derivative_at(values, h, n - 1);
    sum - (d1 - d0) * (h * h / 12.0)
}

/// Plain trapezoid rule.
pub fn trapezoid(values: &[DVector<f64>], h: f64) -> DVector<f64> {
    let n = values.len();
    let mut sum = DVector::zeros(values[0].len());
    for (k, v) in values.iter().enumerate() {
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += v * (w * h);
    }
    sum
}

/// Infinity norm, propagating NaN.
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    crate::report::max_abs(v.iter().copied())
}
