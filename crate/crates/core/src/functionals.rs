//! Terminal cost, its conjugate, the interaction functional and the
//! Fenchel-Young certificate.
//!
//! The terminal cost is the Moreau envelope of the indicator of densities
//! supported in a ball `B_R(x0)`:
//!
//! ```text
//! G(rho)  = min_{q in P(B)} |q - rho|^2 / (2 v w)
//! G*(phi) = max_{x in B} phi(x) + (v w / 2) sum_i phi_i^2
//! ```
//!
//! with `w = dx^d` the cell volume. Pairings are plain sums over masses, so
//! these two are an exact conjugate pair on the grid.

use crate::error::{HjdError, Result};
use crate::grid::{DensityField, ScalarField, TorusGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct BallTerminalCost {
    center: Vec<f64>,
    radius: f64,
    moreau_v: f64,
}

impl BallTerminalCost {
    pub fn new(center: Vec<f64>, radius: f64, moreau_v: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if !(moreau_v.is_finite() && moreau_v > 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "moreau parameter must be positive, got {moreau_v}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(HjdError::InvalidArgument("ball center must be finite".into()));
        }
        Ok(BallTerminalCost {
            center,
            radius,
            moreau_v,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn moreau_v(&self) -> f64 {
        self.moreau_v
    }

    pub fn with_moreau_v(&self, moreau_v: f64) -> Result<Self> {
        Self::new(self.center.clone(), self.radius, moreau_v)
    }

    /// Vertices within periodic distance `R` of the center, ties included.
    pub fn ball_vertices(&self, grid: &TorusGrid) -> Result<Vec<usize>> {
        if self.center.len() != grid.dim() {
            return Err(HjdError::DimensionMismatch {
                expected: grid.dim(),
                got: self.center.len(),
            });
        }
        // A little slack so that vertices exactly at distance R survive rounding.
        let r = self.radius * (1.0 + 1e-12);
        let inside: Vec<usize> = (0..grid.n_vertices())
            .filter(|&i| grid.periodic_distance(&grid.coords(i), &self.center) <= r)
            .collect();
        if inside.is_empty() {
            return Err(HjdError::EmptyBall);
        }
        Ok(inside)
    }
}

/// `G*(phi0)`.
pub fn conjugate_g(cost: &BallTerminalCost, phi0: &ScalarField) -> Result<f64> {
    let ball = cost.ball_vertices(phi0.grid())?;
    Ok(conjugate_g_on(cost, &ball, phi0))
}

/// `G*(phi0)` with the ball vertices precomputed by [`BallTerminalCost::ball_vertices`].
pub fn conjugate_g_on(cost: &BallTerminalCost, ball: &[usize], phi0: &ScalarField) -> f64 {
    let v = phi0.values();
    let sup = ball.iter().map(|&i| v[i]).fold(f64::NEG_INFINITY, f64::max);
    sup + 0.5 * cost.moreau_v * phi0.grid().cell_volume() * phi0.norm_sq()
}

/// Euclidean projection of `rho` onto densities supported on the ball.
pub fn project_ball_simplex(rho: &ScalarField, cost: &BallTerminalCost) -> Result<DensityField> {
    let ball = cost.ball_vertices(rho.grid())?;
    let vals = rho.values();
    let mut sorted: Vec<f64> = ball.iter().map(|&i| vals[i]).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    let mut out = vec![0.0; vals.len()];
    for &i in &ball {
        out[i] = (vals[i] - tau).max(0.0);
    }
    // Absorb rounding so the result is a density to machine precision.
    let s: f64 = out.iter().sum();
    for x in &mut out {
        *x /= s;
    }
    DensityField::new(ScalarField::new(*rho.grid(), out)?)
}

/// `G(rho)`, evaluated through the projection.
pub fn moreau_g(cost: &BallTerminalCost, rho: &ScalarField) -> Result<f64> {
    let proj = project_ball_simplex(rho, cost)?;
    let dist_sq: f64 = proj
        .values()
        .iter()
        .zip(rho.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(dist_sq / (2.0 * cost.moreau_v * rho.grid().cell_volume()))
}

/// Interaction functional `F`. Only the zero functional is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InteractionSpec {
    #[default]
    Zero,
}

impl InteractionSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, InteractionSpec::Zero)
    }
}

/// Returns `(F(rho), dF/drho)`.
pub fn eval_interaction(spec: InteractionSpec, rho: &ScalarField) -> (f64, ScalarField) {
    match spec {
        InteractionSpec::Zero => (0.0, ScalarField::zeros(*rho.grid())),
    }
}

/// `G(rho0) + G*(phi0) - <rho0, phi0>`; zero iff `phi0` is a subgradient of `G` at `rho0`.
pub fn optimality_gap(
    cost: &BallTerminalCost,
    rho0: &ScalarField,
    phi0: &ScalarField,
) -> Result<f64> {
    rho0.check_same_grid(phi0)?;
    Ok(moreau_g(cost, rho0)? + conjugate_g(cost, phi0)? - rho0.dot(phi0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_grid() -> TorusGrid {
        TorusGrid::new(2, 50, 8.0).unwrap()
    }

    fn cost(v: f64) -> BallTerminalCost {
        BallTerminalCost::new(vec![0.0, 0.0], 1.0, v).unwrap()
    }

    // Exact QP by enumerating supports; only viable for a handful of vertices.
    fn brute_projection(rho: &[f64], ball: &[usize]) -> Vec<f64> {
        let k = ball.len();
        let mut best = (f64::INFINITY, vec![0.0; rho.len()]);
        for mask in 1u32..(1 << k) {
            let support: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).map(|j| ball[j]).collect();
            let shift = (1.0 - support.iter().map(|&i| rho[i]).sum::<f64>()) / support.len() as f64;
            let mut x = vec![0.0; rho.len()];
            let mut ok = true;
            for &i in &support {
                x[i] = rho[i] + shift;
                ok &= x[i] >= -1e-15;
            }
            if !ok {
                continue;
            }
            let obj: f64 = x.iter().zip(rho).map(|(a, b)| (a - b) * (a - b)).sum();
            if obj < best.0 {
                best = (obj, x);
            }
        }
        best.1
    }

    #[test]
    fn conjugate_examples() {
        let g = example_grid();
        let c = cost(1e-3);
        assert_eq!(conjugate_g(&c, &ScalarField::zeros(g)).unwrap(), 0.0);
        let one = conjugate_g(&c, &ScalarField::constant(g, 1.0)).unwrap();
        assert!((one - 1.032).abs() < 1e-12);

        let mut spike = ScalarField::zeros(g);
        let outside = g.flat_index(&[0, 0]);
        assert!(!c.ball_vertices(&g).unwrap().contains(&outside));
        spike.values_mut()[outside] = 5.0;
        let expected = 0.5e-3 * g.cell_volume() * 25.0;
        assert!((conjugate_g(&c, &spike).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_ball_is_an_error() {
        let g = TorusGrid::new(2, 4, 8.0).unwrap();
        let c = BallTerminalCost::new(vec![1.0, 1.0], 0.1, 1e-3).unwrap();
        assert!(matches!(c.ball_vertices(&g), Err(HjdError::EmptyBall)));
        assert!(matches!(
            conjugate_g(&c, &ScalarField::zeros(g)),
            Err(HjdError::EmptyBall)
        ));
    }

    #[test]
    fn ball_wraps_the_seam() {
        let g = TorusGrid::new(1, 8, 8.0).unwrap();
        let c = BallTerminalCost::new(vec![3.9], 1.0, 1e-3).unwrap();
        let coords: Vec<f64> = c
            .ball_vertices(&g)
            .unwrap()
            .iter()
            .map(|&i| g.coords(i)[0])
            .collect();
        assert!(coords.contains(&-4.0));
        assert!(coords.contains(&3.0));
    }

    #[test]
    fn projection_examples() {
        let g = example_grid();
        let c = cost(1e-3);
        let ball = c.ball_vertices(&g).unwrap();
        let k = ball.len() as f64;

        let zero = project_ball_simplex(&ScalarField::zeros(g), &c).unwrap();
        for &i in &ball {
            assert!((zero.values()[i] - 1.0 / k).abs() < 1e-15);
        }

        let mut inside = ScalarField::zeros(g);
        inside.values_mut()[ball[0]] = 0.25;
        inside.values_mut()[ball[3]] = 0.75;
        let fixed = project_ball_simplex(&inside, &c).unwrap();
        assert_eq!(fixed.values(), inside.values());
        assert_eq!(moreau_g(&c, &inside).unwrap(), 0.0);

        let mut outside = ScalarField::zeros(g);
        outside.values_mut()[0] = 1.0;
        let p = project_ball_simplex(&outside, &c).unwrap();
        for &i in &ball {
            assert!((p.values()[i] - 1.0 / k).abs() < 1e-15);
        }
        let expected = (1.0 + 1.0 / k) / (2.0 * 1e-3 * g.cell_volume());
        assert!((moreau_g(&c, &outside).unwrap() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn moreau_nonincreasing_in_v() {
        let g = example_grid();
        let rho = DensityField::uniform(g);
        let vals: Vec<f64> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&v| moreau_g(&cost(v), rho.field()).unwrap())
            .collect();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
    }

    #[test]
    fn zero_interaction() {
        let g = example_grid();
        let rho = DensityField::uniform(g);
        let (f, grad) = eval_interaction(InteractionSpec::Zero, rho.field());
        assert_eq!(f, 0.0);
        assert_eq!(f - grad.dot(rho.field()), 0.0);
        assert_eq!(grad.max_abs(), 0.0);
    }

    #[test]
    fn gap_vanishes_at_uniform_on_ball() {
        let g = example_grid();
        let c = cost(1e-3);
        let rho = project_ball_simplex(&ScalarField::zeros(g), &c).unwrap();
        let gap = optimality_gap(&c, rho.field(), &ScalarField::zeros(g)).unwrap();
        assert_eq!(gap, 0.0);
    }

    fn small_grid() -> TorusGrid {
        TorusGrid::new(2, 4, 4.0).unwrap()
    }

    fn small_cost(v: f64) -> BallTerminalCost {
        BallTerminalCost::new(vec![0.0, 0.0], 1.0, v).unwrap()
    }

    proptest! {
        #[test]
        fn projection_matches_brute_force(rho in prop::collection::vec(-1.0f64..1.0, 16)) {
            let g = small_grid();
            let c = small_cost(1e-2);
            let ball = c.ball_vertices(&g).unwrap();
            let field = ScalarField::new(g, rho.clone()).unwrap();
            let p = project_ball_simplex(&field, &c).unwrap();
            let brute = brute_projection(&rho, &ball);
            for (a, b) in p.values().iter().zip(&brute) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (i, x) in p.values().iter().enumerate() {
                prop_assert!(*x >= 0.0);
                if !ball.contains(&i) {
                    prop_assert_eq!(*x, 0.0);
                }
            }
        }

        #[test]
        fn fenchel_young(
            rho in prop::collection::vec(0.0f64..1.0, 16),
            phi in prop::collection::vec(-5.0f64..5.0, 16),
            v in 1e-3f64..1.0,
        ) {
            let g = small_grid();
            let c = small_cost(v);
            let rho = DensityField::normalized(ScalarField::new(g, rho).unwrap()).unwrap();
            let phi = ScalarField::new(g, phi).unwrap();
            prop_assert!(optimality_gap(&c, rho.field(), &phi).unwrap() >= -1e-10);
        }

        #[test]
        fn conjugate_is_convex_and_monotone(
            a in prop::collection::vec(-5.0f64..5.0, 16),
            b in prop::collection::vec(-5.0f64..5.0, 16),
            bump in 0.0f64..3.0,
        ) {
            let g = small_grid();
            let c = small_cost(0.1);
            let fa = ScalarField::new(g, a.clone()).unwrap();
            let fb = ScalarField::new(g, b.clone()).unwrap();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let fm = ScalarField::new(g, mid).unwrap();
            let lhs = conjugate_g(&c, &fm).unwrap();
            let rhs = 0.5 * (conjugate_g(&c, &fa).unwrap() + conjugate_g(&c, &fb).unwrap());
            prop_assert!(lhs <= rhs + 1e-12);

            let ball = c.ball_vertices(&g).unwrap();
            let mut up = a.clone();
            for &i in &ball {
                up[i] = up[i].max(0.0) + bump;
            }
            let base: Vec<f64> = a.iter().enumerate()
                .map(|(i, &x)| if ball.contains(&i) { x.max(0.0) } else { x })
                .collect();
            let lo = conjugate_g(&c, &ScalarField::new(g, base).unwrap()).unwrap();
            let hi = conjugate_g(&c, &ScalarField::new(g, up).unwrap()).unwrap();
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
