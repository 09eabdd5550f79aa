//! The modal grid: Dirichlet sine eigenbasis of the Laplacian on (0,L)^d.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Discretization of the box (0,L)^d with k solution components.
///
/// Modes are multi-indices m in {1..N}^d with Laplacian eigenvalues
/// lambda_m = sum_i (pi m_i / L)^2. Physical collocation points are
/// x_j = j L/(N+1), j = 1..N per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Spatial dimension (1, 2 or 3).
    pub d: usize,
    /// Box side length.
    #[serde(rename = "L")]
    pub len: f64,
    /// Modes per dimension.
    #[serde(rename = "N")]
    pub n: usize,
    /// Number of solution components.
    pub k: usize,
}

impl Grid {
    pub fn new(d: usize, len: f64, n: usize, k: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&d) {
            return Err(Error::config("grid.d", format!("dimension must be 1..3, got {d}")));
        }
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::config("grid.L", format!("box length must be positive, got {len}")));
        }
        if n < 2 {
            return Err(Error::config("grid.N", format!("need at least 2 modes per dimension, got {n}")));
        }
        if k < 1 {
            return Err(Error::config("grid.k", format!("need at least one component, got {k}")));
        }
        Ok(Grid { d, len, n, k })
    }

    /// Total number of modes N^d.
    pub fn modes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Length of a coefficient vector: k * N^d.
    pub fn coeff_len(&self) -> usize {
        self.k * self.modes()
    }

    /// Multi-index (1-based) of the flat mode index, C-order with the last
    /// axis fastest.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut m = [1usize; MAX_DIM];
        let mut rem = flat;
        for axis in (0..self.d).rev() {
            m[axis] = rem % self.n + 1;
            rem /= self.n;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize]) -> usize {
        let mut flat = 0;
        for axis in 0..self.d {
            flat = flat * self.n + (m[axis] - 1);
        }
        flat
    }

    /// Laplacian eigenvalue of one axis index.
    pub fn axis_eigenvalue(&self, m: usize) -> f64 {
        let w = std::f64::consts::PI * m as f64 / self.len;
        w * w
    }

    /// Laplacian eigenvalue lambda_m of a flat mode index.
    pub fn eigenvalue(&self, flat: usize) -> f64 {
        let m = self.multi_index(flat);
        (0..self.d).map(|a| self.axis_eigenvalue(m[a])).sum()
    }

    /// Smallest eigenvalue, attained at m = (1,...,1).
    pub fn lambda_min(&self) -> f64 {
        self.d as f64 * self.axis_eigenvalue(1)
    }

    /// Largest eigenvalue, attained at m = (N,...,N).
    pub fn lambda_max(&self) -> f64 {
        self.d as f64 * self.axis_eigenvalue(self.n)
    }

    /// All eigenvalues in flat-index order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let nd = self.modes();
        (0..nd).map(|i| self.eigenvalue(i)).collect()
    }

    /// Interior collocation point x_j (1-based j) along one axis.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.len / (self.n as f64 + 1.0)
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.d == other.d && self.n == other.n && self.k == other.k && (self.len - other.len).abs() <= 1e-14 * self.len.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_eigenvalue() {
        let g = Grid::new(1, 1.0, 4, 1).unwrap();
        assert_relative_eq!(g.eigenvalue(0), PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn two_dimensional_corner_eigenvalue() {
        let g = Grid::new(2, 1.0, 4, 2).unwrap();
        // flat 0 is m = (1,1)
        assert_relative_eq!(g.eigenvalue(0), 2.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn rejects_bad_dimension() {
        let err = Grid::new(0, 1.0, 4, 1).unwrap_err();
        assert!(err.to_string().contains("grid.d"));
        assert!(Grid::new(4, 1.0, 4, 1).is_err());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(1, -1.0, 4, 1).is_err());
        assert!(Grid::new(1, 1.0, 1, 1).is_err());
        assert!(Grid::new(1, 1.0, 4, 0).is_err());
    }

    #[test]
    fn flat_and_multi_index_roundtrip() {
        let g = Grid::new(3, 2.0, 5, 1).unwrap();
        for flat in 0..g.modes() {
            let m = g.multi_index(flat);
            assert_eq!(g.flat_index(&m[..g.d]), flat);
        }
    }

    #[test]
    fn eigenvalue_extremes() {
        let g = Grid::new(2, 1.0, 8, 1).unwrap();
        let eigs = g.eigenvalues();
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eigs.iter().cloned().fold(0.0, f64::max);
        assert_relative_eq!(min, g.lambda_min());
        assert_relative_eq!(max, g.lambda_max());
    }
}
