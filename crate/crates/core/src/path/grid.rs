use serde::{Deserialize, Serialize};

use super::PathError;

/// Uniform grid `t_k = k / (n - 1)` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformGrid {
    n: usize,
}

/// Time discretization of `[0, 1]`.
pub type TimeGrid = UniformGrid;
/// Deformation-parameter discretization of `[0, 1]`.
pub type EpsilonGrid = UniformGrid;

impl UniformGrid {
    pub const MIN_NODES: usize = 3;

    pub fn new(n: usize) -> Result<Self, PathError> {
        if n < Self::MIN_NODES {
            return Err(PathError::GridTooCoarse {
                nodes: n,
                min: Self::MIN_NODES,
            });
        }
        Ok(UniformGrid { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.node(k))
    }

    /// Grid with half the spacing over the same interval (`2n - 1` nodes).
    pub fn refined(&self) -> UniformGrid {
        UniformGrid { n: 2 * self.n - 1 }
    }

    /// Trapezoid weights: `h/2` at the ends, `h` inside. They sum to one.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n)
            .map(|k| if k == 0 || k == self.n - 1 { h / 2.0 } else { h })
            .collect()
    }
}

/// `10 h²`, the default A-path residual tolerance.
pub fn default_path_tol(grid: &TimeGrid) -> f64 {
    10.0 * grid.step().powi(2)
}

/// `max(1e-6, 50 (h² + h_ε²))`, the default homotopy decision tolerance.
pub fn default_homotopy_tol(time: &TimeGrid, eps: &EpsilonGrid) -> f64 {
    (50.0 * (time.step().powi(2) + eps.step().powi(2))).max(1e-6)
}
