//! Multilevel randomized block coordinate ascent on the Hopf objective.
//!
//! Each level runs the same loop: draw a random block of coordinates, take
//! a central-difference derivative along the normalized block indicator,
//! and move by `step * derivative` along it if that improves the objective.
//! Every `max_inner` iterations the step is halved. A level stops once
//! `n_coords` consecutive iterations attempted moves shorter than `eps`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HjdError, Result};
use crate::grid::{extend, restrict, DensityField, FieldKind, MultilevelHierarchy, ScalarField, TorusGrid};
use crate::objective::{default_fd_step, directional_derivative, HopfProblem, Objective};

/// How coordinate blocks are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockShape {
    /// Uniform sample without replacement.
    #[default]
    Scattered,
    /// Periodic box of side `round(size^(1/d))` at a uniform random corner.
    Patch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub block_shape: BlockShape,
    pub n_levels: usize,
    /// Initial Lipschitz estimate in the `L^2(dx^d)` metric of each level,
    /// so the coefficient step is `1 / (L dx^d)`.
    pub lipschitz_init: f64,
    /// Convergence threshold; `None` means `1e-5 (1 + |J(init)|)` per level.
    pub eps: Option<f64>,
    pub max_inner: usize,
    pub block_fraction: f64,
    pub seed: u64,
    /// Central-difference step; `None` means [`default_fd_step`].
    pub fd_step: Option<f64>,
    /// Hard cap on iterations per level.
    pub max_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            block_shape: BlockShape::Scattered,
            n_levels: 1,
            lipschitz_init: 2.0,
            eps: None,
            max_inner: 100,
            block_fraction: 0.125,
            seed: 0,
            fd_step: None,
            max_iters: 1_000_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(HjdError::InvalidArgument(what.to_string()));
        if self.n_levels == 0 {
            return bad("n_levels must be at least 1");
        }
        if !(self.lipschitz_init.is_finite() && self.lipschitz_init > 0.0) {
            return bad("lipschitz_init must be positive");
        }
        if matches!(self.eps, Some(e) if !(e.is_finite() && e > 0.0)) {
            return bad("eps must be positive");
        }
        if self.max_inner == 0 || self.max_iters == 0 {
            return bad("max_inner and max_iters must be positive");
        }
        if !(self.block_fraction > 0.0 && self.block_fraction <= 1.0) {
            return bad("block_fraction must lie in (0, 1]");
        }
        if matches!(self.fd_step, Some(h) if !(h.is_finite() && h > 0.0)) {
            return bad("fd_step must be positive");
        }
        Ok(())
    }

    pub fn block_size(&self, n_coords: usize) -> usize {
        ((self.block_fraction * n_coords as f64).ceil() as usize).clamp(1, n_coords)
    }
}

/// Working state of one level.
#[derive(Debug, Clone)]
pub struct LevelState {
    pub level: usize,
    pub phi: ScalarField,
    pub step: f64,
    pub count: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub level: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub phi: ScalarField,
    pub value: f64,
    pub iterations: usize,
    pub accepted: usize,
    /// True when the iteration cap stopped the level before convergence.
    pub hit_cap: bool,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub phi: ScalarField,
    pub value: f64,
    pub levels: Vec<LevelOutcome>,
}

impl SolveOutcome {
    pub fn history(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.levels.iter().flat_map(|l| l.history.iter())
    }

    pub fn hit_cap(&self) -> bool {
        self.levels.iter().any(|l| l.hit_cap)
    }
}

fn draw_block(rng: &mut ChaCha8Rng, grid: &TorusGrid, size: usize, shape: BlockShape) -> Vec<usize> {
    let n = grid.n_vertices();
    match shape {
        BlockShape::Scattered => sample(rng, n, size).into_vec(),
        BlockShape::Patch => {
            let d = grid.dim();
            let m = grid.m_per_axis();
            let side = ((size as f64).powf(1.0 / d as f64).round() as usize).clamp(1, m);
            let corner = grid.multi_index(rng.gen_range(0..n));
            let mut out = Vec::with_capacity(side.pow(d as u32));
            let mut offset = vec![0usize; d];
            loop {
                let idx: Vec<i64> = corner.iter().zip(&offset).map(|(c, o)| (c + o) as i64).collect();
                out.push(grid.flat_index(&idx));
                let mut axis = 0;
                while axis < d {
                    offset[axis] += 1;
                    if offset[axis] < side {
                        break;
                    }
                    offset[axis] = 0;
                    axis += 1;
                }
                if axis == d {
                    break;
                }
            }
            out
        }
    }
}

/// `1/sqrt(|I|)` on the listed vertices, zero elsewhere.
pub fn block_direction(indices: &[usize], grid: TorusGrid) -> Result<ScalarField> {
    if indices.is_empty() {
        return Err(HjdError::EmptyBlock);
    }
    let n = grid.n_vertices();
    let mut values = vec![0.0; n];
    let w = 1.0 / (indices.len() as f64).sqrt();
    for &i in indices {
        if i >= n {
            return Err(HjdError::InvalidArgument(format!(
                "coordinate {i} out of range for {n} vertices"
            )));
        }
        values[i] = w;
    }
    ScalarField::new(grid, values)
}

fn rejecting_divergence<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(HjdError::Diverged { step, scheme, cfl }) => {
            log::debug!("{scheme} trial diverged at step {step} (cfl {cfl:.3e}); rejected");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Coordinate ascent on one level, starting from `init_phi`.
pub fn level_solve<O: Objective + ?Sized>(
    problem: &O,
    init_phi: &ScalarField,
    config: &OptimizerConfig,
    level: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LevelOutcome> {
    config.validate()?;
    let grid = *problem.grid();
    if *init_phi.grid() != grid {
        return Err(HjdError::GridMismatch);
    }
    let n = grid.n_vertices();
    let block = config.block_size(n);
    let mut value = problem.value(init_phi)?;
    let eps = config.eps.unwrap_or(1e-5 * (1.0 + value.abs()));
    let mut state = LevelState {
        level,
        phi: init_phi.clone(),
        step: 1.0 / (config.lipschitz_init * grid.cell_volume()),
        count: 0,
        k: 0,
    };
    let mut history = vec![HistoryEntry {
        iteration: 0,
        level,
        value,
    }];
    let mut accepted = 0;
    for iteration in 1..=config.max_iters {
        let idx = draw_block(rng, &grid, block, config.block_shape);
        let dir = block_direction(&idx, grid)?;
        let h = config.fd_step.unwrap_or_else(|| default_fd_step(&state.phi));
        // A trial that diverges is rejected like any other non-improving move.
        let deriv = rejecting_divergence(directional_derivative(problem, &state.phi, &dir, h))?;
        // Attempted move length, counted whether or not the move is taken,
        // so a run of rejected large steps does not look like convergence.
        let change = deriv.map_or(0.0, |d| state.step * d.abs());
        if let Some(d) = deriv {
            let candidate = state.phi.axpy(state.step * d, &dir);
            if let Some(v) = rejecting_divergence(problem.value(&candidate))?.filter(|&v| v > value) {
                state.phi = candidate;
                value = v;
                accepted += 1;
                history.push(HistoryEntry {
                    iteration,
                    level,
                    value,
                });
            }
        }
        if change > eps {
            state.count = 0;
        } else {
            state.count += 1;
        }
        state.k += 1;
        if state.k == config.max_inner {
            state.k = 0;
            state.step *= 0.5;
        }
        if state.count >= n {
            log::debug!("level {level}: converged after {iteration} iterations, J = {value}");
            return Ok(LevelOutcome {
                phi: state.phi,
                value,
                iterations: iteration,
                accepted,
                hit_cap: false,
                history,
            });
        }
    }
    log::warn!(
        "level {level}: iteration cap {} reached, returning best iterate",
        config.max_iters
    );
    Ok(LevelOutcome {
        phi: state.phi,
        value,
        iterations: config.max_iters,
        accepted,
        hit_cap: true,
        history,
    })
}

/// Coarse-to-fine solve. Level `l` poses the problem on `hierarchy.level(l)`
/// with the input density restricted there, and starts from the extension
/// of the previous level's result (zero on the coarsest level).
pub fn multilevel_solve(
    problem: &HopfProblem,
    hierarchy: &MultilevelHierarchy,
    config: &OptimizerConfig,
) -> Result<SolveOutcome> {
    config.validate()?;
    if hierarchy.finest() != problem.grid() {
        return Err(HjdError::GridMismatch);
    }
    let top = hierarchy.n_levels() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut levels: Vec<LevelOutcome> = Vec::with_capacity(hierarchy.n_levels());
    let mut phi = ScalarField::zeros(*hierarchy.level(0)?);
    for l in 0..=top {
        let sub = if l == top {
            problem.clone()
        } else {
            let rho = restrict(problem.rho_input().field(), hierarchy, top, l, FieldKind::Density)?;
            problem.with_input(DensityField::normalized(rho)?)?
        };
        if l > 0 {
            phi = extend(&phi, hierarchy, l - 1, l)?;
        }
        let out = level_solve(&sub, &phi, config, l, &mut rng)?;
        phi = out.phi.clone();
        levels.push(out);
    }
    let value = levels.last().expect("at least one level").value;
    Ok(SolveOutcome { phi, value, levels })
}
