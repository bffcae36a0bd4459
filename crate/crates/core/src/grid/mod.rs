//! Periodic uniform grids on the d-torus, vertex/edge fields, difference
//! stencils and the multilevel transfer operators.
//!
//! Vertices are flattened row-major with axis 0 fastest: the vertex with
//! per-axis indices `(i_0, .., i_{d-1})` has flat index `sum_k i_k * m^k`.
//! Edge `(i, v)` joins vertex `i` to `i + e_v` and is stored at
//! `v * m^d + i`.

mod field;
mod stencil;
mod transfer;

pub use field::{DensityField, EdgeField, ScalarField};
pub use stencil::{divergence, edge_average, forward_difference, laplacian};
pub use transfer::{extend, restrict, FieldKind, MultilevelHierarchy};

use crate::error::{HjdError, Result};

/// Uniform periodic grid of `m^d` vertices over a centered box of side `side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    d: usize,
    m: usize,
    side: f64,
    dx: f64,
}

impl TorusGrid {
    pub fn new(d: usize, m_per_axis: usize, side: f64) -> Result<Self> {
        if d == 0 {
            return Err(HjdError::InvalidArgument("dimension must be >= 1".into()));
        }
        if m_per_axis < 2 {
            return Err(HjdError::InvalidArgument(
                "need at least 2 points per axis".into(),
            ));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "side length must be positive, got {side}"
            )));
        }
        m_per_axis
            .checked_pow(d as u32)
            .ok_or_else(|| HjdError::InvalidArgument("grid too large".into()))?;
        Ok(TorusGrid {
            d,
            m: m_per_axis,
            side,
            dx: side / m_per_axis as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn m_per_axis(&self) -> usize {
        self.m
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.d as i32)
    }

    pub fn n_vertices(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn n_edges(&self) -> usize {
        self.d * self.n_vertices()
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.side
    }

    #[inline]
    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.m.pow(axis as u32)
    }

    /// Index of the vertex `i + e_axis`, with wraparound.
    #[inline]
    pub fn neighbor_plus(&self, i: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        if (i / s) % self.m == self.m - 1 {
            i + s - self.m * s
        } else {
            i + s
        }
    }

    /// Index of the vertex `i - e_axis`, with wraparound.
    #[inline]
    pub fn neighbor_minus(&self, i: usize, axis: usize) -> usize {
        let s = self.stride(axis);
        if (i / s).is_multiple_of(self.m) {
            i + self.m * s - s
        } else {
            i - s
        }
    }

    /// Per-axis integer coordinates of a flat vertex index.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.d);
        for _ in 0..self.d {
            out.push(i % self.m);
            i /= self.m;
        }
        out
    }

    /// Flat index of per-axis coordinates; any integer is reduced modulo m.
    pub fn flat_index(&self, idx: &[i64]) -> usize {
        debug_assert_eq!(idx.len(), self.d);
        let m = self.m as i64;
        idx.iter()
            .rev()
            .fold(0usize, |acc, &k| acc * self.m + k.rem_euclid(m) as usize)
    }

    /// Physical coordinates of vertex `i`.
    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .into_iter()
            .map(|k| self.origin() + k as f64 * self.dx)
            .collect()
    }

    /// Shortest wraparound distance between two points of the torus.
    pub fn periodic_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let mut r = (x - y).rem_euclid(self.side);
                if r > 0.5 * self.side {
                    r = self.side - r;
                }
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_spacing() {
        let g = TorusGrid::new(2, 200, 8.0).unwrap();
        assert!((g.dx() - 0.04).abs() < 1e-15);
        assert!((g.dx() * 200.0 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_line() {
        let g = TorusGrid::new(1, 2, 2.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_eq!(g.coords(0), vec![-1.0]);
        assert_eq!(g.coords(1), vec![0.0]);
    }

    #[test]
    fn counts() {
        let g = TorusGrid::new(2, 4, 1.0).unwrap();
        assert_eq!(g.n_vertices(), 16);
        assert_eq!(g.n_edges(), 32);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(0, 4, 1.0).is_err());
        assert!(TorusGrid::new(2, 1, 1.0).is_err());
        assert!(TorusGrid::new(2, 4, 0.0).is_err());
        assert!(TorusGrid::new(2, 4, -1.0).is_err());
    }

    #[test]
    fn periodic_indexing() {
        let g = TorusGrid::new(3, 5, 1.0).unwrap();
        for i in 0..g.n_vertices() {
            let mi: Vec<i64> = g.multi_index(i).iter().map(|&k| k as i64).collect();
            assert_eq!(g.flat_index(&mi), i);
            for axis in 0..3 {
                let mut shifted = mi.clone();
                shifted[axis] += 5;
                assert_eq!(g.flat_index(&shifted), i);
                assert_eq!(g.neighbor_minus(g.neighbor_plus(i, axis), axis), i);
                shifted[axis] -= 4;
                assert_eq!(g.flat_index(&shifted), g.neighbor_plus(i, axis));
            }
        }
    }

    #[test]
    fn wraparound_distance() {
        let g = TorusGrid::new(2, 8, 8.0).unwrap();
        let d = g.periodic_distance(&[3.5, 0.0], &[-3.5, 0.0]);
        assert!((d - 1.0).abs() < 1e-12);
    }
}
