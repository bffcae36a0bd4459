//! Separable Hamiltonians `H(p) = sum_v h_v(p_v)` and their Legendre duals.
//!
//! All three families are position independent. Each component `h_v` is
//! either convex with its minimum at zero or concave with its maximum at
//! zero, which is what the monotone splittings below rely on.

use std::f64::consts::PI;

use crate::error::{HjdError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianSpec {
    /// `1/2 |p|^2`.
    Quadratic,
    /// `1/2 (p_1^2 - p_2^2)`, two dimensions only.
    SaddleQuadratic,
    /// Smoothed `|p|_1`: `h_c(s) = (2/pi) s atan(c s) - log(1 + c^2 s^2) / (c pi)`.
    SoftL1 { c: f64 },
}

impl HamiltonianSpec {
    pub fn soft_l1(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(HjdError::InvalidArgument(format!(
                "soft-l1 sharpness must be positive, got {c}"
            )));
        }
        Ok(HamiltonianSpec::SoftL1 { c })
    }

    pub fn name(&self) -> &'static str {
        match self {
            HamiltonianSpec::Quadratic => "quadratic",
            HamiltonianSpec::SaddleQuadratic => "saddle",
            HamiltonianSpec::SoftL1 { .. } => "soft-l1",
        }
    }

    /// Checks that the Hamiltonian is defined in dimension `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        if matches!(self, HamiltonianSpec::SaddleQuadratic) && d != 2 {
            return Err(HjdError::DimensionMismatch {
                expected: 2,
                got: d,
            });
        }
        Ok(())
    }

    /// True when the component along `axis` is concave.
    #[inline]
    pub fn is_concave(&self, axis: usize) -> bool {
        matches!(self, HamiltonianSpec::SaddleQuadratic) && axis == 1
    }

    /// Scalar component `h_axis(s)`.
    #[inline]
    pub fn component(&self, axis: usize, s: f64) -> f64 {
        match *self {
            HamiltonianSpec::Quadratic => 0.5 * s * s,
            HamiltonianSpec::SaddleQuadratic => {
                if axis == 1 {
                    -0.5 * s * s
                } else {
                    0.5 * s * s
                }
            }
            HamiltonianSpec::SoftL1 { c } => {
                2.0 / PI * s * (c * s).atan() - (c * c * s * s).ln_1p() / (c * PI)
            }
        }
    }

    /// Derivative `h_axis'(s)`.
    #[inline]
    pub fn component_derivative(&self, axis: usize, s: f64) -> f64 {
        match *self {
            HamiltonianSpec::Quadratic => s,
            HamiltonianSpec::SaddleQuadratic => {
                if axis == 1 {
                    -s
                } else {
                    s
                }
            }
            HamiltonianSpec::SoftL1 { c } => 2.0 / PI * (c * s).atan(),
        }
    }

    /// `int_0^s min(h', 0)`: the part of `h` that is nonincreasing in `s`.
    #[inline]
    pub fn decreasing_part(&self, axis: usize, s: f64) -> f64 {
        let arg = if self.is_concave(axis) { s.max(0.0) } else { s.min(0.0) };
        self.component(axis, arg)
    }

    /// `int_0^s max(h', 0)`: the part of `h` that is nondecreasing in `s`.
    #[inline]
    pub fn increasing_part(&self, axis: usize, s: f64) -> f64 {
        let arg = if self.is_concave(axis) { s.min(0.0) } else { s.max(0.0) };
        self.component(axis, arg)
    }

    pub fn eval_h(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p.len())?;
        Ok(p.iter()
            .enumerate()
            .map(|(v, &s)| self.component(v, s))
            .sum())
    }

    pub fn eval_dh(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(p.len())?;
        Ok(p.iter()
            .enumerate()
            .map(|(v, &s)| self.component_derivative(v, s))
            .collect())
    }

    /// Lagrangian `L(v) = sup_p <v, p> - H(p)`; `+inf` outside the domain.
    pub fn eval_lagrangian(&self, v: &[f64]) -> Result<f64> {
        match *self {
            HamiltonianSpec::Quadratic => Ok(0.5 * v.iter().map(|x| x * x).sum::<f64>()),
            HamiltonianSpec::SaddleQuadratic => Err(HjdError::UnsupportedLagrangian),
            HamiltonianSpec::SoftL1 { c } => Ok(v
                .iter()
                .map(|&t| {
                    if t.abs() >= 1.0 {
                        f64::INFINITY
                    } else {
                        -2.0 / (c * PI) * (0.5 * PI * t).cos().ln()
                    }
                })
                .sum()),
        }
    }

    /// Largest `|h'|` over `|s| <= bound`.
    pub fn max_slope(&self, bound: f64) -> f64 {
        match *self {
            HamiltonianSpec::Quadratic | HamiltonianSpec::SaddleQuadratic => bound,
            HamiltonianSpec::SoftL1 { c } => 2.0 / PI * (c * bound).atan(),
        }
    }
}
