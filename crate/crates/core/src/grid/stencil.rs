use super::{EdgeField, ScalarField};
use crate::par;

/// Per edge `(phi[i] - phi[i + e_v]) / dx`.
pub fn forward_difference(phi: &ScalarField) -> EdgeField {
    let g = *phi.grid();
    let n = g.n_vertices();
    let inv_dx = 1.0 / g.dx();
    let v = phi.values();
    let mut out = vec![0.0; g.n_edges()];
    for (axis, block) in out.chunks_mut(n).enumerate() {
        par::fill_indexed(block, |i| (v[i] - v[g.neighbor_plus(i, axis)]) * inv_dx);
    }
    EdgeField::new(g, out).expect("edge count matches grid")
}

/// Discrete divergence `(1/dx) sum_v (m[i, v] - m[i - e_v, v])`.
pub fn divergence(m: &EdgeField) -> ScalarField {
    let g = *m.grid();
    let inv_dx = 1.0 / g.dx();
    let mut out = vec![0.0; g.n_vertices()];
    par::fill_indexed(&mut out, |i| {
        (0..g.dim())
            .map(|axis| m.get(i, axis) - m.get(g.neighbor_minus(i, axis), axis))
            .sum::<f64>()
            * inv_dx
    });
    ScalarField::new(g, out).expect("vertex count matches grid")
}

/// Edge density `theta = (rho[i] + rho[i + e_v]) / 2`.
pub fn edge_average(rho: &ScalarField) -> EdgeField {
    let g = *rho.grid();
    let n = g.n_vertices();
    let v = rho.values();
    let mut out = vec![0.0; g.n_edges()];
    for (axis, block) in out.chunks_mut(n).enumerate() {
        par::fill_indexed(block, |i| 0.5 * (v[i] + v[g.neighbor_plus(i, axis)]));
    }
    EdgeField::new(g, out).expect("edge count matches grid")
}

/// Unscaled graph Laplacian `sum_v (u[i + e_v] + u[i - e_v] - 2 u[i])`.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = *u.grid();
    let v = u.values();
    let mut out = vec![0.0; g.n_vertices()];
    par::fill_indexed(&mut out, |i| laplacian_at(&g, v, i));
    ScalarField::new(g, out).expect("vertex count matches grid")
}

#[inline]
pub(crate) fn laplacian_at(g: &super::TorusGrid, v: &[f64], i: usize) -> f64 {
    (0..g.dim())
        .map(|axis| v[g.neighbor_plus(i, axis)] + v[g.neighbor_minus(i, axis)] - 2.0 * v[i])
        .sum()
}
