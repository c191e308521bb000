//! Pass/fail records produced by the checkers.

use serde::{Deserialize, Serialize};

/// One named comparison of a residual against a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// `pass` is `residual < tol` (a NaN residual fails).
    pub fn below(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        CheckRecord {
            name: name.into(),
            residual,
            tol,
            pass: residual < tol,
        }
    }

    /// `pass` is `residual >= threshold`; used for checks that must detect
    /// a violation.
    pub fn at_least(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        CheckRecord {
            name: name.into(),
            residual,
            tol: threshold,
            pass: residual >= threshold,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        CheckRecord {
            name: name.into(),
            residual: if pass { 0.0 } else { 1.0 },
            tol: 0.5,
            pass,
        }
    }
}

/// Largest absolute value, propagating NaN.
pub fn max_abs<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |m: f64, v| {
        if m.is_nan() || v.is_nan() {
            f64::NAN
        } else {
            m.max(v.abs())
        }
    })
}
