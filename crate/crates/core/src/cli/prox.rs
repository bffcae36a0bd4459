//! Quadratic Wasserstein proximal map through the Hopf dual.
//!
//! For `beta > 0` the prox of `beta W_2^2(., rho)` at `rho1` is
//! `rho1 + beta w phi0`, where `w = dx^d`, `phi0` is the potential swept
//! back to time 0 from the maximizer of
//!
//! ```text
//! K(phi) = <rho, phi> - <rho1, phi0> - (beta / 2) w |phi0|^2
//! ```
//!
//! Shifting `phi` by a constant shifts `phi0` by the same constant, and the
//! best shift makes `phi0` zero-mean, which is applied exactly after the
//! ascent so the result keeps unit mass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{potential_sweep, SchemeConfig, TimeGrid};
use crate::error::{HjdError, Result};
use crate::grid::{DensityField, ScalarField, TorusGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::objective::Objective;
use crate::optimizer::{level_solve, OptimizerConfig};

use super::config::RunConfig;

/// Entries below `-NEGATIVE_TOL` are reported.
pub const NEGATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ProxProblem {
    grid: TorusGrid,
    time_grid: TimeGrid,
    scheme: SchemeConfig,
    rho: DensityField,
    rho1: DensityField,
    beta: f64,
}

impl ProxProblem {
    pub fn new(rho1: DensityField, rho: DensityField, beta: f64, time_grid: TimeGrid, scheme: SchemeConfig) -> Result<Self> {
        if *rho1.grid() != *rho.grid() {
            return Err(HjdError::GridMismatch);
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(HjdError::InvalidArgument(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(ProxProblem {
            grid: *rho.grid(),
            time_grid,
            scheme,
            rho,
            rho1,
            beta,
        })
    }

    fn sweep(&self, phi: &ScalarField) -> Result<ScalarField> {
        potential_sweep(phi, &HamiltonianSpec::Quadratic, &self.scheme, &self.time_grid).map(|(p, _)| p)
    }

    /// `rho1 + beta w (phi0 - mean(phi0))` for the potential `phi`.
    pub fn density_for(&self, phi: &ScalarField) -> Result<ScalarField> {
        let phi0 = self.sweep(phi)?;
        let mean = phi0.sum() / phi0.len() as f64;
        Ok(self
            .rho1
            .field()
            .axpy(self.beta * self.grid.cell_volume(), &phi0.add_constant(-mean)))
    }
}

impl Objective for ProxProblem {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn value(&self, phi: &ScalarField) -> Result<f64> {
        let phi0 = self.sweep(phi)?;
        Ok(self.rho.field().dot(phi)
            - self.rho1.field().dot(&phi0)
            - 0.5 * self.beta * self.grid.cell_volume() * phi0.norm_sq())
    }
}

#[derive(Debug, Clone)]
pub struct ProxOutcome {
    pub rho: ScalarField,
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Solves the proximal problem on the finest grid with the run's time grid,
/// scheme and optimizer settings.
pub fn wasserstein_prox(rho1: &DensityField, rho: &DensityField, beta: f64, config: &RunConfig) -> Result<ProxOutcome> {
    let time_grid = TimeGrid::new(config.horizon, config.steps)?;
    let problem = ProxProblem::new(rho1.clone(), rho.clone(), beta, time_grid, config.scheme)?;
    prox_with(&problem, &config.optimizer)
}

pub fn prox_with(problem: &ProxProblem, optimizer: &OptimizerConfig) -> Result<ProxOutcome> {
    if problem.beta == 0.0 {
        return Ok(ProxOutcome {
            rho: problem.rho1.field().clone(),
            value: 0.0,
            warnings: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(optimizer.seed);
    let out = level_solve(problem, &ScalarField::zeros(problem.grid), optimizer, 0, &mut rng)?;
    let rho = problem.density_for(&out.phi)?;
    let mut warnings = Vec::new();
    if out.hit_cap {
        warnings.push(format!("iteration cap {} reached", optimizer.max_iters));
    }
    let min = rho.min();
    if min < -NEGATIVE_TOL {
        warnings.push(format!("result has negative entries (min {min:.3e})"));
    }
    Ok(ProxOutcome {
        rho,
        value: out.value,
        warnings,
    })
}
