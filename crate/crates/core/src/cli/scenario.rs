//! Built-in experiments. Densities are normalized mixtures of periodic
//! Gaussian bumps with hand-picked centers and widths.

use std::path::PathBuf;

use crate::dynamics::SchemeConfig;
use crate::error::Result;
use crate::grid::{DensityField, ScalarField, TorusGrid};
use crate::hamiltonian::HamiltonianSpec;
use crate::optimizer::OptimizerConfig;

use super::config::RunConfig;

pub const SIDE: f64 = 8.0;
/// 200 points on a side of 8 gives `dx = 0.04`.
pub const M: usize = 200;
pub const HORIZON: f64 = 1.0;
/// 125 steps on `[0, 1]` gives `dt = 0.008`.
pub const STEPS: usize = 125;
pub const LF_BETA: f64 = 2.0;
pub const MOREAU_V: f64 = 1e-3;
pub const LEVELS: usize = 3;
pub const LIPSCHITZ: f64 = 2.0;
pub const SOFT_L1_C: f64 = 20.0;

/// `(center, width, weight)` of each bump.
type Bump = ([f64; 2], f64, f64);

const TWO_LUMPS: &[Bump] = &[([2.0, 0.0], 0.3, 1.0), ([-2.0, 0.0], 0.3, 1.0)];

/// A spread of mass left of the ball around (3, 0), which wraps across the
/// seam so the mass faces it from both sides.
const EXAMPLE2_LUMPS: &[Bump] = &[
    ([-1.0, 0.0], 0.35, 1.0),
    ([-1.0, 1.5], 0.3, 0.6),
    ([-1.0, -1.5], 0.3, 0.6),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Example1,
    Example2,
    Example3,
    Example4,
    Custom,
}

impl Scenario {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "example1" => Some(Scenario::Example1),
            "example2" => Some(Scenario::Example2),
            "example3" => Some(Scenario::Example3),
            "example4" => Some(Scenario::Example4),
            "custom" => Some(Scenario::Custom),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Example1 => "example1",
            Scenario::Example2 => "example2",
            Scenario::Example3 => "example3",
            Scenario::Example4 => "example4",
            Scenario::Custom => "custom",
        }
    }

    /// Registry parameters. For `Custom` these are placeholders that the
    /// parser overwrites with required keys.
    pub fn defaults(&self) -> RunConfig {
        let (ham, center, radius) = match self {
            Scenario::Example2 => (HamiltonianSpec::Quadratic, vec![3.0, 0.0], 2.0),
            Scenario::Example3 => (HamiltonianSpec::SoftL1 { c: SOFT_L1_C }, vec![0.0, 0.0], 1.0),
            Scenario::Example4 => (HamiltonianSpec::SaddleQuadratic, vec![0.0, 0.0], 1.0),
            Scenario::Example1 | Scenario::Custom => (HamiltonianSpec::Quadratic, vec![0.0, 0.0], 1.0),
        };
        RunConfig {
            scenario: *self,
            dim: 2,
            side: SIDE,
            m: M,
            horizon: HORIZON,
            steps: STEPS,
            ham,
            scheme: SchemeConfig::upwind_lf(LF_BETA).expect("registry beta is valid"),
            center,
            radius,
            moreau_v: MOREAU_V,
            optimizer: OptimizerConfig {
                n_levels: LEVELS,
                lipschitz_init: LIPSCHITZ,
                ..OptimizerConfig::default()
            },
            output_dir: PathBuf::from("out").join(self.name()),
            snapshot_times: (0..=5).map(|k| HORIZON * k as f64 / 5.0).collect(),
            input_rho: None,
        }
    }

    /// The built-in input density on `grid`, or `None` for custom runs.
    pub fn density(&self, grid: TorusGrid) -> Option<Result<DensityField>> {
        let bumps = match self {
            Scenario::Example1 | Scenario::Example3 | Scenario::Example4 => TWO_LUMPS,
            Scenario::Example2 => EXAMPLE2_LUMPS,
            Scenario::Custom => return None,
        };
        Some(bump_mixture(grid, bumps))
    }
}

/// Normalized sum of periodic Gaussians. Bump centers use the first two
/// coordinates; further axes are centered at the origin.
fn bump_mixture(grid: TorusGrid, bumps: &[Bump]) -> Result<DensityField> {
    let d = grid.dim();
    let f = ScalarField::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, width, weight)| {
                let center: Vec<f64> = (0..d).map(|a| c.get(a).copied().unwrap_or(0.0)).collect();
                let r = grid.periodic_distance(x, &center);
                weight * (-r * r / (2.0 * width * width)).exp()
            })
            .sum()
    });
    DensityField::normalized(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SchemeKind;

    #[test]
    fn registry_parameters() {
        for s in [Scenario::Example1, Scenario::Example2, Scenario::Example3, Scenario::Example4] {
            let c = s.defaults();
            let g = TorusGrid::new(c.dim, c.m, c.side).unwrap();
            assert!((g.dx() - 0.04).abs() < 1e-15);
            assert!((c.horizon / c.steps as f64 - 0.008).abs() < 1e-15);
            assert_eq!(c.horizon, 1.0);
            assert_eq!(c.scheme.kind, SchemeKind::UpwindLF);
            assert_eq!(c.scheme.beta, 2.0);
            assert_eq!(c.moreau_v, 1e-3);
            assert_eq!(c.optimizer.n_levels, 3);
            assert_eq!(c.optimizer.lipschitz_init, 2.0);
        }
        assert_eq!(Scenario::Example3.defaults().ham, HamiltonianSpec::SoftL1 { c: 20.0 });
        assert_eq!(Scenario::Example2.defaults().center, vec![3.0, 0.0]);
        assert_eq!(Scenario::Example2.defaults().radius, 2.0);
        assert_eq!(Scenario::Example4.defaults().ham, HamiltonianSpec::SaddleQuadratic);
    }

    #[test]
    fn densities_are_normalized_and_symmetric() {
        let g = TorusGrid::new(2, 40, SIDE).unwrap();
        let rho = Scenario::Example1.density(g).unwrap().unwrap();
        assert!((rho.field().sum() - 1.0).abs() < 1e-12);
        // Mirror x -> -x maps index i to (m - i) mod m on axis 0.
        let v = rho.values();
        for j in 0..40 {
            for i in 0..40 {
                let mirror = (40 - i) % 40;
                assert!((v[j * 40 + i] - v[j * 40 + mirror]).abs() < 1e-15);
            }
        }
        assert_eq!(Scenario::Example4.density(g).unwrap().unwrap(), rho);
        assert!(Scenario::Custom.density(g).is_none());
    }

    #[test]
    fn names_round_trip() {
        for s in [Scenario::Example1, Scenario::Example2, Scenario::Example3, Scenario::Example4, Scenario::Custom] {
            assert_eq!(Scenario::from_name(s.name()), Some(s));
        }
    }
}
