use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::dynamics::TimeGrid;
use crate::error::{HjdError, Result};
use crate::functionals::{optimality_gap, BallTerminalCost, InteractionSpec};
use crate::grid::{forward_difference, DensityField, MultilevelHierarchy, ScalarField, TorusGrid};
use crate::objective::{hopf_objective, HopfProblem};
use crate::optimizer::{multilevel_solve, HistoryEntry};

use super::config::RunConfig;
use super::io::{read_field, write_field, FieldFormat, FieldMeta, Quantity};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub final_objective: f64,
    pub objective_history: Vec<HistoryEntry>,
    /// `G(rho0) + G*(phi0) - <rho0, phi0>` on the final trajectory.
    pub optimality_gap: f64,
    /// Mass of `rho0` on the grid vertices of the terminal ball.
    pub mass_in_ball_at_zero: f64,
    pub max_cfl: f64,
    pub min_density: f64,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

impl RunReport {
    /// Text form without the wall time, so reruns produce identical bytes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "final_objective = {}", self.final_objective);
        let _ = writeln!(out, "optimality_gap = {}", self.optimality_gap);
        let _ = writeln!(out, "mass_in_ball_at_zero = {}", self.mass_in_ball_at_zero);
        let _ = writeln!(out, "max_cfl = {}", self.max_cfl);
        let _ = writeln!(out, "min_density = {}", self.min_density);
        for w in &self.warnings {
            let _ = writeln!(out, "warning = {w}");
        }
        let _ = writeln!(out, "# iteration level value");
        for h in &self.objective_history {
            let _ = writeln!(out, "{} {} {}", h.iteration, h.level, h.value);
        }
        out
    }
}

pub fn build_grid(config: &RunConfig) -> Result<TorusGrid> {
    TorusGrid::new(config.dim, config.m, config.side).map_err(|e| HjdError::config("grid.m", e.to_string()))
}

/// The input density: the CSV named by `input.rho` if given, else the
/// scenario's built-in field.
pub fn input_density(config: &RunConfig, grid: TorusGrid) -> Result<DensityField> {
    match &config.input_rho {
        Some(path) => load_density(path, grid),
        None => config
            .scenario
            .density(grid)
            .ok_or_else(|| HjdError::config("input.rho", "required for a custom scenario"))?,
    }
}

pub fn load_density(path: &Path, grid: TorusGrid) -> Result<DensityField> {
    let (field, _) = read_field(path)?;
    if *field.grid() != grid {
        return Err(HjdError::config(
            "input.rho",
            format!("{} does not match the configured grid", path.display()),
        ));
    }
    DensityField::new(field).map_err(|e| HjdError::config("input.rho", e.to_string()))
}

pub fn build_problem(config: &RunConfig) -> Result<HopfProblem> {
    let grid = build_grid(config)?;
    let rho = input_density(config, grid)?;
    let time_grid =
        TimeGrid::new(config.horizon, config.steps).map_err(|e| HjdError::config("time.steps", e.to_string()))?;
    let cost = BallTerminalCost::new(config.center.clone(), config.radius, config.moreau_v)
        .map_err(|e| HjdError::config("terminal", e.to_string()))?;
    HopfProblem::new(time_grid, rho, config.ham, InteractionSpec::Zero, cost, config.scheme)
}

fn write_pair(dir: &Path, stem: &str, field: &ScalarField, meta: FieldMeta) -> Result<()> {
    write_field(field, &dir.join(format!("{stem}.csv")), FieldFormat::Csv, meta)?;
    write_field(field, &dir.join(format!("{stem}.pgm")), FieldFormat::Pgm, meta)
}

/// Solves the configured problem and writes density snapshots, the final
/// potential, its forward differences and `report.txt` into the output
/// directory.
pub fn run_scenario(config: &RunConfig) -> Result<RunReport> {
    let start = Instant::now();
    let problem = build_problem(config)?;
    let hierarchy = MultilevelHierarchy::new(*problem.grid(), config.optimizer.n_levels)
        .map_err(|e| HjdError::config("optimizer.levels", e.to_string()))?;
    let outcome = multilevel_solve(&problem, &hierarchy, &config.optimizer)?;
    let (value, traj) = hopf_objective(&problem, &outcome.phi)?;

    let mut warnings = Vec::new();
    for (l, level) in outcome.levels.iter().enumerate() {
        if level.hit_cap {
            warnings.push(format!("level {l} stopped at the iteration cap"));
        }
    }
    if traj.max_cfl > 1.0 {
        warnings.push(format!("cfl number {:.3} exceeds 1", traj.max_cfl));
    }
    let min_density = traj.min_density();
    if min_density < 0.0 {
        warnings.push(format!("negative density {min_density:.3e}"));
    }

    let rho0 = &traj.rho[0];
    let gap = optimality_gap(problem.terminal_cost(), rho0, &traj.phi[0])?;
    let mass: f64 = problem.ball().iter().map(|&i| rho0.values()[i]).sum();

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| HjdError::io(dir, e))?;
    let tg = problem.time_grid();
    for &s in &config.snapshot_times {
        let n = tg.nearest_level(s);
        let meta = FieldMeta {
            quantity: Quantity::Rho,
            time: tg.time(n),
        };
        write_pair(dir, &format!("rho_t{:.4}", tg.time(n)), traj.rho_at(n), meta)?;
    }
    let end = FieldMeta {
        quantity: Quantity::Phi,
        time: tg.horizon(),
    };
    write_pair(dir, "phi_final", &outcome.phi, end)?;
    let grad = forward_difference(&outcome.phi);
    for axis in 0..problem.grid().dim() {
        let f = ScalarField::new(*problem.grid(), grad.axis(axis).to_vec())?;
        let meta = FieldMeta {
            quantity: Quantity::Gradient(axis),
            ..end
        };
        write_pair(dir, &format!("grad_phi_axis{axis}"), &f, meta)?;
    }

    let report = RunReport {
        final_objective: value,
        objective_history: outcome.history().copied().collect(),
        optimality_gap: gap,
        mass_in_ball_at_zero: mass,
        max_cfl: traj.max_cfl,
        min_density,
        wall_time: start.elapsed(),
        warnings,
    };
    let path = dir.join("report.txt");
    std::fs::write(&path, report.to_text()).map_err(|e| HjdError::io(&path, e))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("hjd-run-{name}-{}", std::process::id()))
    }

    #[test]
    fn zero_horizon_closes_the_gap() {
        let dir = tmp("t0");
        let text = format!(
            "scenario = example1
             grid.m = 16
             time.horizon = 0
             time.steps = 0
             terminal.radius = 0.3
             terminal.moreau_v = 1
             optimizer.levels = 1
             optimizer.lipschitz = 1
             optimizer.max_inner = 20000
             optimizer.block_fraction = 0.0625
             optimizer.eps = 1e-10
             output.dir = {}",
            dir.display()
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let report = run_scenario(&cfg).unwrap();
        assert!(report.optimality_gap >= -1e-12);
        assert!(report.optimality_gap < 1e-5, "gap {}", report.optimality_gap);
        assert!(dir.join("rho_t0.0000.csv").exists());
        assert!(dir.join("grad_phi_axis1.pgm").exists());
        let again = run_scenario(&cfg).unwrap();
        assert_eq!(report.to_text(), again.to_text());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn custom_without_density_is_a_config_error() {
        let mut cfg = super::super::scenario::Scenario::Example1.defaults();
        cfg.scenario = super::super::scenario::Scenario::Custom;
        match input_density(&cfg, build_grid(&cfg).unwrap()) {
            Err(HjdError::Config { key, .. }) => assert_eq!(key, "input.rho"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
