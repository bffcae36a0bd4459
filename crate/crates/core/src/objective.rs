//! The discrete Hopf objective and its directional derivatives.
//!
//! ```text
//! J(phi) = <phi, rho> - sum_{n=1..N} dt (F(rho^n) - <dF(rho^n), rho^n>) - G*(phi^0)
//! ```
//!
//! where `(rho^n, phi^n)` come from the backward sweep started at
//! `(rho, phi)`. The value function is the supremum of `J`.

use crate::dynamics::{backward_sweep, potential_sweep, SchemeConfig, TimeGrid, Trajectory};
use crate::error::{HjdError, Result};
use crate::functionals::{conjugate_g_on, eval_interaction, BallTerminalCost, InteractionSpec};
use crate::grid::{DensityField, ScalarField, TorusGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::par;

/// A scalar function of a potential on a fixed grid, to be maximized.
pub trait Objective: Sync {
    fn grid(&self) -> &TorusGrid;
    fn value(&self, phi: &ScalarField) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct HopfProblem {
    grid: TorusGrid,
    time_grid: TimeGrid,
    rho_input: DensityField,
    ham: HamiltonianSpec,
    interaction: InteractionSpec,
    terminal_cost: BallTerminalCost,
    scheme: SchemeConfig,
    ball: Vec<usize>,
}

impl HopfProblem {
    pub fn new(
        time_grid: TimeGrid,
        rho_input: DensityField,
        ham: HamiltonianSpec,
        interaction: InteractionSpec,
        terminal_cost: BallTerminalCost,
        scheme: SchemeConfig,
    ) -> Result<Self> {
        let grid = *rho_input.grid();
        ham.check_dim(grid.dim())?;
        let ball = terminal_cost.ball_vertices(&grid)?;
        Ok(HopfProblem {
            grid,
            time_grid,
            rho_input,
            ham,
            interaction,
            terminal_cost,
            scheme,
            ball,
        })
    }

    /// The same problem posed for another input density, possibly on another grid.
    pub fn with_input(&self, rho_input: DensityField) -> Result<Self> {
        Self::new(
            self.time_grid,
            rho_input,
            self.ham,
            self.interaction,
            self.terminal_cost.clone(),
            self.scheme,
        )
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn rho_input(&self) -> &DensityField {
        &self.rho_input
    }

    pub fn ham(&self) -> &HamiltonianSpec {
        &self.ham
    }

    pub fn interaction(&self) -> InteractionSpec {
        self.interaction
    }

    pub fn terminal_cost(&self) -> &BallTerminalCost {
        &self.terminal_cost
    }

    pub fn scheme(&self) -> &SchemeConfig {
        &self.scheme
    }

    pub fn ball(&self) -> &[usize] {
        &self.ball
    }

    fn check_phi(&self, phi: &ScalarField) -> Result<()> {
        if *phi.grid() != self.grid {
            return Err(HjdError::GridMismatch);
        }
        Ok(())
    }

    fn running_term(&self, traj: &Trajectory) -> f64 {
        if self.interaction.is_zero() {
            return 0.0;
        }
        let dt = self.time_grid.dt();
        traj.rho[1..]
            .iter()
            .map(|r| {
                let (f, grad) = eval_interaction(self.interaction, r);
                dt * (f - grad.dot(r))
            })
            .sum()
    }
}

/// `J(phi_terminal)` together with the trajectory that produced it.
pub fn hopf_objective(problem: &HopfProblem, phi_terminal: &ScalarField) -> Result<(f64, Trajectory)> {
    problem.check_phi(phi_terminal)?;
    let traj = backward_sweep(
        phi_terminal,
        &problem.rho_input,
        &problem.ham,
        problem.interaction,
        &problem.scheme,
        &problem.time_grid,
    )?;
    let value = phi_terminal.dot(problem.rho_input.field())
        - problem.running_term(&traj)
        - conjugate_g_on(&problem.terminal_cost, &problem.ball, &traj.phi[0]);
    Ok((value, traj))
}

/// `J(phi_terminal)` alone. Skips the density sweep when `F = 0`.
pub fn hopf_value(problem: &HopfProblem, phi_terminal: &ScalarField) -> Result<f64> {
    if !problem.interaction.is_zero() {
        return hopf_objective(problem, phi_terminal).map(|(v, _)| v);
    }
    problem.check_phi(phi_terminal)?;
    let (phi0, _) = potential_sweep(phi_terminal, &problem.ham, &problem.scheme, &problem.time_grid)?;
    Ok(phi_terminal.dot(problem.rho_input.field())
        - conjugate_g_on(&problem.terminal_cost, &problem.ball, &phi0))
}

impl Objective for HopfProblem {
    fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn value(&self, phi: &ScalarField) -> Result<f64> {
        hopf_value(self, phi)
    }
}

/// Default central-difference step `1e-4 (1 + |phi|_inf)`.
pub fn default_fd_step(phi: &ScalarField) -> f64 {
    1e-4 * (1.0 + phi.max_abs())
}

/// Central difference of `J` at `phi` along the unit vector `direction`.
pub fn directional_derivative<O: Objective + ?Sized>(
    problem: &O,
    phi: &ScalarField,
    direction: &ScalarField,
    h: f64,
) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(HjdError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if (direction.norm_sq().sqrt() - 1.0).abs() > 1e-12 {
        return Err(HjdError::InvalidArgument("direction must have unit norm".into()));
    }
    phi.check_same_grid(direction)?;
    let plus = phi.axpy(h, direction);
    let minus = phi.axpy(-h, direction);
    let (a, b) = par::join(|| problem.value(&plus), || problem.value(&minus));
    Ok((a? - b?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump_density(g: TorusGrid) -> DensityField {
        let f = ScalarField::from_fn(g, |x| {
            let r2: f64 = x.iter().map(|c| (c - 1.5) * (c - 1.5)).sum();
            (-r2).exp() + 0.05
        });
        DensityField::normalized(f).unwrap()
    }

    fn problem(horizon: f64, steps: usize) -> HopfProblem {
        let g = TorusGrid::new(2, 8, 8.0).unwrap();
        HopfProblem::new(
            TimeGrid::new(horizon, steps).unwrap(),
            bump_density(g),
            HamiltonianSpec::Quadratic,
            InteractionSpec::Zero,
            BallTerminalCost::new(vec![0.0, 0.0], 1.0, 1e-2).unwrap(),
            SchemeConfig::upwind(),
        )
        .unwrap()
    }

    fn unit(g: TorusGrid, rng: &mut ChaCha8Rng) -> ScalarField {
        let v = ScalarField::new(g, (0..g.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        v.scaled(1.0 / v.norm_sq().sqrt())
    }

    #[test]
    fn zero_potential_gives_zero() {
        let p = problem(1.0, 10);
        let (v, _) = hopf_objective(&p, &ScalarField::zeros(*p.grid())).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn constant_potential() {
        let p = problem(1.0, 10);
        let g = *p.grid();
        let c = 1.3;
        let expected = -0.5 * 1e-2 * g.cell_volume() * g.n_vertices() as f64 * c * c;
        let (v, _) = hopf_objective(&p, &ScalarField::constant(g, c)).unwrap();
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_horizon_is_the_static_dual() {
        let p = problem(0.0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = unit(*p.grid(), &mut rng).scaled(4.0);
        let (v, traj) = hopf_objective(&p, &phi).unwrap();
        assert_eq!(traj.phi.len(), 1);
        let direct = phi.dot(p.rho_input().field()) - crate::functionals::conjugate_g(p.terminal_cost(), &phi).unwrap();
        assert_eq!(v, direct);
    }

    #[test]
    fn value_path_matches_full_objective() {
        let p = problem(1.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = unit(*p.grid(), &mut rng);
        let (a, _) = hopf_objective(&p, &phi).unwrap();
        assert_eq!(a, hopf_value(&p, &phi).unwrap());
        assert_eq!(a.to_bits(), hopf_objective(&p, &phi).unwrap().0.to_bits());
    }

    #[test]
    fn static_derivative_matches_analytic_gradient() {
        let p = problem(0.0, 0);
        let g = *p.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = unit(g, &mut rng).scaled(3.0);
        let vals = phi.values();
        let top = *p
            .ball()
            .iter()
            .max_by(|&&a, &&b| vals[a].total_cmp(&vals[b]))
            .unwrap();
        let vw = 1e-2 * g.cell_volume();
        let grad: Vec<f64> = (0..g.n_vertices())
            .map(|i| p.rho_input().values()[i] - vw * vals[i] - if i == top { 1.0 } else { 0.0 })
            .collect();
        let grad = ScalarField::new(g, grad).unwrap();
        for _ in 0..10 {
            let dir = unit(g, &mut rng);
            let fd = directional_derivative(&p, &phi, &dir, default_fd_step(&phi)).unwrap();
            let exact = grad.dot(&dir);
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{fd} vs {exact}");
        }
    }

    #[test]
    fn static_derivative_vanishes_off_support() {
        let p = problem(0.0, 0);
        let g = *p.grid();
        let far = g.flat_index(&[0, 0]);
        assert!(!p.ball().contains(&far));
        let mut dir = ScalarField::zeros(g);
        dir.values_mut()[far] = 1.0;
        // The density is positive everywhere, so only the pairing survives.
        let d = directional_derivative(&p, &ScalarField::zeros(g), &dir, 1e-4).unwrap();
        assert!((d - p.rho_input().values()[far]).abs() < 1e-10);
    }

    #[test]
    fn richardson_step_halving() {
        let mut p = problem(1.0, 10);
        p.scheme = SchemeConfig::symplectic();
        let g = *p.grid();
        let phi = ScalarField::from_fn(g, |x| 0.3 * (x[0] * 0.785).sin() + 0.2 * (x[1] * 0.785).cos() - 0.1 * x[0].cos());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dir = unit(g, &mut rng);
        let d = |h: f64| directional_derivative(&p, &phi, &dir, h).unwrap();
        let (a, b, c) = (d(0.04), d(0.02), d(0.01));
        let ratio = (a - b) / (b - c);
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn derivative_input_checks() {
        let p = problem(1.0, 2);
        let g = *p.grid();
        let z = ScalarField::zeros(g);
        assert!(directional_derivative(&p, &z, &z, 1e-3).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(directional_derivative(&p, &z, &unit(g, &mut rng), 0.0).is_err());
    }
}
