//! Backward integration of the discrete characteristic system.
//!
//! Time runs from `n = N` (the input density and the terminal potential)
//! down to `n = 0`. On an edge from vertex `i` to `i + e_v` the momentum is
//! `p = (phi[i] - phi[i + e_v]) / dx`; mass moves along `h_v'(p)` as `n`
//! decreases.
//!
//! * `Symplectic`: the adjoint pair of the numerical Hamiltonian
//!   `sum_e h(p_e) theta_e`, with `theta` the edge average.
//! * `Upwind`: monotone flux `h'^+ rho_i + h'^- rho_{i+e}` for the density
//!   and the monotone split `h_dec(p_out) + h_inc(p_in)` for the potential.
//! * `UpwindLF`: `Upwind` plus `beta / (2 dx)` times the graph Laplacian on
//!   both fields.

use crate::error::{HjdError, Result};
use crate::functionals::{eval_interaction, InteractionSpec};
use crate::grid::{DensityField, ScalarField, TorusGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
    dt: f64,
}

impl TimeGrid {
    /// `horizon = 0` with `n_steps = 0` is the degenerate grid with no dynamics.
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "horizon must be finite and nonnegative, got {horizon}"
            )));
        }
        if (horizon == 0.0) != (n_steps == 0) {
            return Err(HjdError::InvalidArgument(format!(
                "horizon {horizon} is incompatible with {n_steps} steps"
            )));
        }
        let dt = if n_steps == 0 { 0.0 } else { horizon / n_steps as f64 };
        Ok(TimeGrid {
            horizon,
            n_steps,
            dt,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Index of the level closest to time `s`.
    pub fn nearest_level(&self, s: f64) -> usize {
        if self.n_steps == 0 {
            return 0;
        }
        ((s / self.dt).round().max(0.0) as usize).min(self.n_steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Symplectic,
    Upwind,
    UpwindLF,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Symplectic => "symplectic",
            SchemeKind::Upwind => "upwind",
            SchemeKind::UpwindLF => "upwind-lf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Lax-Friedrichs strength; ignored unless `kind` is `UpwindLF`.
    pub beta: f64,
    pub picard_iters: usize,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, beta: f64, picard_iters: usize) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "beta must be nonnegative, got {beta}"
            )));
        }
        if picard_iters == 0 {
            return Err(HjdError::InvalidArgument(
                "picard_iters must be at least 1".into(),
            ));
        }
        Ok(SchemeConfig {
            kind,
            beta,
            picard_iters,
        })
    }

    pub fn symplectic() -> Self {
        SchemeConfig {
            kind: SchemeKind::Symplectic,
            beta: 0.0,
            picard_iters: 1,
        }
    }

    pub fn upwind() -> Self {
        SchemeConfig {
            kind: SchemeKind::Upwind,
            beta: 0.0,
            picard_iters: 1,
        }
    }

    pub fn upwind_lf(beta: f64) -> Result<Self> {
        Self::new(SchemeKind::UpwindLF, beta, 1)
    }

    /// Coefficient in front of the unscaled Laplacian.
    fn lf_coeff(&self, dx: f64) -> f64 {
        match self.kind {
            SchemeKind::UpwindLF => self.beta / (2.0 * dx),
            _ => 0.0,
        }
    }
}

/// Fields at every level `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rho: Vec<ScalarField>,
    pub phi: Vec<ScalarField>,
    pub time_grid: TimeGrid,
    /// Largest per-step monotonicity number seen; above 1 the step may oscillate.
    pub max_cfl: f64,
}

impl Trajectory {
    pub fn rho_at(&self, n: usize) -> &ScalarField {
        &self.rho[n]
    }

    pub fn phi_at(&self, n: usize) -> &ScalarField {
        &self.phi[n]
    }

    pub fn min_density(&self) -> f64 {
        self.rho.iter().map(|r| r.min()).fold(f64::INFINITY, f64::min)
    }
}

/// Per-sweep stencil context with precomputed neighbor indices.
struct Stepper<'a> {
    grid: TorusGrid,
    plus: Vec<usize>,
    minus: Vec<usize>,
    inv_dx: f64,
    lf: f64,
    ham: &'a HamiltonianSpec,
    kind: SchemeKind,
}

impl<'a> Stepper<'a> {
    fn new(grid: TorusGrid, ham: &'a HamiltonianSpec, scheme: &SchemeConfig) -> Self {
        let n = grid.n_vertices();
        let mut plus = Vec::with_capacity(n * grid.dim());
        let mut minus = Vec::with_capacity(n * grid.dim());
        for axis in 0..grid.dim() {
            plus.extend((0..n).map(|i| grid.neighbor_plus(i, axis)));
            minus.extend((0..n).map(|i| grid.neighbor_minus(i, axis)));
        }
        Stepper {
            grid,
            plus,
            minus,
            inv_dx: 1.0 / grid.dx(),
            lf: scheme.lf_coeff(grid.dx()),
            ham,
            kind: scheme.kind,
        }
    }

    #[inline]
    fn n(&self) -> usize {
        self.grid.n_vertices()
    }

    #[inline]
    fn laplacian(&self, u: &[f64], i: usize) -> f64 {
        let n = self.n();
        (0..self.grid.dim())
            .map(|axis| u[self.plus[axis * n + i]] + u[self.minus[axis * n + i]] - 2.0 * u[i])
            .sum()
    }

    #[inline]
    fn hamiltonian(&self, u: &[f64], i: usize) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for axis in 0..self.grid.dim() {
            let p_out = (u[i] - u[self.plus[axis * n + i]]) * self.inv_dx;
            let p_in = (u[self.minus[axis * n + i]] - u[i]) * self.inv_dx;
            acc += match self.kind {
                SchemeKind::Symplectic => {
                    0.5 * (self.ham.component(axis, p_out) + self.ham.component(axis, p_in))
                }
                _ => self.ham.decreasing_part(axis, p_out) + self.ham.increasing_part(axis, p_in),
            };
        }
        acc
    }

    #[inline]
    fn flux(&self, phi: &[f64], rho: &[f64], i: usize, axis: usize) -> f64 {
        let j = self.plus[axis * self.n() + i];
        let a = self.ham.component_derivative(axis, (phi[i] - phi[j]) * self.inv_dx);
        match self.kind {
            SchemeKind::Symplectic => 0.5 * a * (rho[i] + rho[j]),
            _ => a.max(0.0) * rho[i] + a.min(0.0) * rho[j],
        }
    }

    /// Largest diagonal loss over both updates at one step.
    fn cfl(&self, u: &[f64], dt: f64) -> f64 {
        let n = self.n();
        let d = self.grid.dim();
        let local = par::max_indexed(n, |i| {
            let (mut r, mut f) = (0.0, 0.0);
            for axis in 0..d {
                let a_out = self
                    .ham
                    .component_derivative(axis, (u[i] - u[self.plus[axis * n + i]]) * self.inv_dx);
                let a_in = self
                    .ham
                    .component_derivative(axis, (u[self.minus[axis * n + i]] - u[i]) * self.inv_dx);
                match self.kind {
                    SchemeKind::Symplectic => {
                        r += a_out.abs().max(a_in.abs());
                        f += a_out.abs().max(a_in.abs());
                    }
                    _ => {
                        r += a_out.max(0.0) - a_in.min(0.0);
                        f += a_in.max(0.0) - a_out.min(0.0);
                    }
                }
            }
            r.max(f) * self.inv_dx
        });
        dt.abs() * (local.max(0.0) + 2.0 * d as f64 * self.lf)
    }

    fn hj(&self, base: &[f64], grad: Option<&[f64]>, dt: f64, iters: usize) -> Vec<f64> {
        let mut iter = base.to_vec();
        let mut out = vec![0.0; base.len()];
        for _ in 0..iters {
            par::fill_indexed(&mut out, |i| {
                let mut rate = self.hamiltonian(&iter, i);
                if self.lf != 0.0 {
                    rate += self.lf * self.laplacian(&iter, i);
                }
                if let Some(gr) = grad {
                    rate += gr[i];
                }
                base[i] + dt * rate
            });
            std::mem::swap(&mut iter, &mut out);
        }
        iter
    }

    fn continuity(&self, r: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
        let n = self.n();
        let ratio = dt * self.inv_dx;
        let mut out = vec![0.0; n];
        par::fill_indexed(&mut out, |i| {
            let mut net = 0.0;
            for axis in 0..self.grid.dim() {
                net += self.flux(u, r, i, axis) - self.flux(u, r, self.minus[axis * n + i], axis);
            }
            let mut val = r[i] - ratio * net;
            if self.lf != 0.0 {
                val += dt * self.lf * self.laplacian(r, i);
            }
            val
        });
        out
    }

    fn field(&self, values: Vec<f64>) -> ScalarField {
        ScalarField::new(self.grid, values).expect("vertex count matches grid")
    }
}

fn interaction_gradient(interaction: InteractionSpec, rho: &ScalarField) -> Option<ScalarField> {
    if interaction.is_zero() {
        None
    } else {
        Some(eval_interaction(interaction, rho).1)
    }
}

fn check_step(field: &ScalarField, step: usize, scheme: &SchemeConfig, cfl: f64) -> Result<()> {
    if field.is_finite() {
        Ok(())
    } else {
        Err(HjdError::Diverged {
            step,
            scheme: scheme.kind.name(),
            cfl,
        })
    }
}

/// One backward step of the potential: returns `phi^{n-1}` from `phi^n`.
/// `rho` feeds `dF` and is lagged at level `n` by the sweep.
/// A lone step reports divergence at index 0.
pub fn hj_backward_step(
    phi_next: &ScalarField,
    rho: &ScalarField,
    ham: &HamiltonianSpec,
    interaction: InteractionSpec,
    scheme: &SchemeConfig,
    dt: f64,
) -> Result<ScalarField> {
    phi_next.check_same_grid(rho)?;
    let st = Stepper::new(*phi_next.grid(), ham, scheme);
    let grad = interaction_gradient(interaction, rho);
    let out = st.field(st.hj(
        phi_next.values(),
        grad.as_ref().map(|g| g.values()),
        dt,
        scheme.picard_iters,
    ));
    check_step(&out, 0, scheme, st.cfl(phi_next.values(), dt))?;
    Ok(out)
}

/// One backward step of the density: returns `rho^{n-1}` from `rho^n` and
/// the potential `phi` driving the step. The sweep passes `phi^{n-1}`, which
/// makes the symplectic density step the transpose of the linearized
/// potential step once the Picard iteration has converged.
///
/// The result is a conservative update; it may leave the nonnegative cone
/// for the symplectic scheme, so it is returned as a plain field.
pub fn continuity_backward_step(
    rho_n: &ScalarField,
    phi: &ScalarField,
    ham: &HamiltonianSpec,
    scheme: &SchemeConfig,
    dt: f64,
) -> Result<ScalarField> {
    rho_n.check_same_grid(phi)?;
    let st = Stepper::new(*rho_n.grid(), ham, scheme);
    let out = st.field(st.continuity(rho_n.values(), phi.values(), dt));
    check_step(&out, 0, scheme, st.cfl(phi.values(), dt))?;
    Ok(out)
}

/// Full backward sweep from the terminal pair at `n = N` to `n = 0`.
pub fn backward_sweep(
    phi_terminal: &ScalarField,
    rho_terminal: &DensityField,
    ham: &HamiltonianSpec,
    interaction: InteractionSpec,
    scheme: &SchemeConfig,
    time_grid: &TimeGrid,
) -> Result<Trajectory> {
    phi_terminal.check_same_grid(rho_terminal.field())?;
    ham.check_dim(phi_terminal.grid().dim())?;
    let n = time_grid.n_steps();
    let dt = time_grid.dt();
    let mut rho = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    rho.push(rho_terminal.field().clone());
    phi.push(phi_terminal.clone());
    let st = Stepper::new(*phi_terminal.grid(), ham, scheme);
    let mut max_cfl = 0.0f64;
    for k in (1..=n).rev() {
        let (r, u) = (rho.last().unwrap(), phi.last().unwrap());
        let cfl = st.cfl(u.values(), dt);
        max_cfl = max_cfl.max(cfl);
        let grad = interaction_gradient(interaction, r);
        let u_prev = st.field(st.hj(
            u.values(),
            grad.as_ref().map(|g| g.values()),
            dt,
            scheme.picard_iters,
        ));
        check_step(&u_prev, k - 1, scheme, cfl)?;
        let r_prev = st.field(st.continuity(r.values(), u_prev.values(), dt));
        check_step(&r_prev, k - 1, scheme, cfl)?;
        rho.push(r_prev);
        phi.push(u_prev);
    }
    rho.reverse();
    phi.reverse();
    if max_cfl > 1.0 {
        log::warn!(
            "{} sweep exceeds the monotonicity bound: cfl = {max_cfl:.3}",
            scheme.kind.name()
        );
    }
    Ok(Trajectory {
        rho,
        phi,
        time_grid: *time_grid,
        max_cfl,
    })
}

/// Potential-only sweep for `F = 0`, where the potential does not see the
/// density. Returns `phi^0` and the largest step CFL number.
pub fn potential_sweep(
    phi_terminal: &ScalarField,
    ham: &HamiltonianSpec,
    scheme: &SchemeConfig,
    time_grid: &TimeGrid,
) -> Result<(ScalarField, f64)> {
    ham.check_dim(phi_terminal.grid().dim())?;
    let dt = time_grid.dt();
    let st = Stepper::new(*phi_terminal.grid(), ham, scheme);
    let mut u = phi_terminal.clone();
    let mut max_cfl = 0.0f64;
    for k in (1..=time_grid.n_steps()).rev() {
        let cfl = st.cfl(u.values(), dt);
        max_cfl = max_cfl.max(cfl);
        u = st.field(st.hj(u.values(), None, dt, scheme.picard_iters));
        check_step(&u, k - 1, scheme, cfl)?;
    }
    Ok((u, max_cfl))
}

/// Explicit forward re-integration from `(rho^0, phi^0)` to level `N`.
pub fn forward_sweep(
    rho0: &ScalarField,
    phi0: &ScalarField,
    ham: &HamiltonianSpec,
    scheme: &SchemeConfig,
    time_grid: &TimeGrid,
) -> Result<(ScalarField, ScalarField)> {
    rho0.check_same_grid(phi0)?;
    let dt = time_grid.dt();
    let st = Stepper::new(*rho0.grid(), ham, scheme);
    let mut r = rho0.clone();
    let mut u = phi0.clone();
    for k in 1..=time_grid.n_steps() {
        let cfl = st.cfl(u.values(), dt);
        r = st.field(st.continuity(r.values(), u.values(), -dt));
        u = st.field(st.hj(u.values(), None, -dt, 1));
        check_step(&u, k, scheme, cfl)?;
        check_step(&r, k, scheme, cfl)?;
    }
    Ok((r, u))
}

/// Numerical Hamiltonian at one level. Symplectic weights edges by
/// `theta`, the upwind kinds by the upwind density of the same flux.
pub fn numerical_hamiltonian(
    rho_n: &ScalarField,
    phi_n: &ScalarField,
    ham: &HamiltonianSpec,
    interaction: InteractionSpec,
    kind: SchemeKind,
) -> f64 {
    let g = *phi_n.grid();
    let u = phi_n.values();
    let r = rho_n.values();
    let inv_dx = 1.0 / g.dx();
    let edges: f64 = (0..g.n_vertices())
        .map(|i| {
            (0..g.dim())
                .map(|axis| {
                    let j = g.neighbor_plus(i, axis);
                    let p = (u[i] - u[j]) * inv_dx;
                    let weight = match kind {
                        SchemeKind::Symplectic => 0.5 * (r[i] + r[j]),
                        _ => {
                            if ham.component_derivative(axis, p) >= 0.0 {
                                r[i]
                            } else {
                                r[j]
                            }
                        }
                    };
                    ham.component(axis, p) * weight
                })
                .sum::<f64>()
        })
        .sum();
    edges + eval_interaction(interaction, rho_n).0
}
