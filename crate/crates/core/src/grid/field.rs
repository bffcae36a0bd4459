use super::TorusGrid;
use crate::error::{HjdError, Result};

/// One real value per grid vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_vertices() {
            return Err(HjdError::DimensionMismatch {
                expected: grid.n_vertices(),
                got: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.n_vertices()],
        }
    }

    /// Samples `f` at every vertex's physical coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.n_vertices()).map(|i| f(&grid.coords(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &ScalarField) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + alpha * b)
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    pub fn add_constant(&self, c: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(HjdError::GridMismatch);
        }
        Ok(())
    }
}

/// A probability vector of cell masses: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField(ScalarField);

impl DensityField {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(field: ScalarField) -> Result<Self> {
        if let Some(v) = field.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(HjdError::InvalidArgument(format!(
                "density value {v} outside [0, 1]"
            )));
        }
        let s = field.sum();
        if (s - 1.0).abs() > Self::SUM_TOL {
            return Err(HjdError::InvalidArgument(format!(
                "density sums to {s}, expected 1"
            )));
        }
        Ok(DensityField(field))
    }

    /// Clips negatives to zero and rescales to unit mass.
    pub fn normalized(field: ScalarField) -> Result<Self> {
        let mut field = field;
        field.values_mut().iter_mut().for_each(|v| *v = v.max(0.0));
        let s = field.sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(HjdError::InvalidArgument(
                "cannot normalize a field with no positive mass".into(),
            ));
        }
        field.values_mut().iter_mut().for_each(|v| *v /= s);
        Self::new(field)
    }

    pub fn uniform(grid: TorusGrid) -> Self {
        DensityField(ScalarField::constant(grid, 1.0 / grid.n_vertices() as f64))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn into_field(self) -> ScalarField {
        self.0
    }

    pub fn grid(&self) -> &TorusGrid {
        self.0.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
}

impl AsRef<ScalarField> for DensityField {
    fn as_ref(&self) -> &ScalarField {
        &self.0
    }
}

/// One real value per directed edge `i + e_v / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl EdgeField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_edges() {
            return Err(HjdError::DimensionMismatch {
                expected: grid.n_edges(),
                got: values.len(),
            });
        }
        Ok(EdgeField { grid, values })
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        EdgeField {
            grid,
            values: vec![c; grid.n_edges()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value on the edge from vertex `i` along `axis`.
    #[inline]
    pub fn get(&self, i: usize, axis: usize) -> f64 {
        self.values[axis * self.grid.n_vertices() + i]
    }

    /// The contiguous block of edges along one axis.
    pub fn axis(&self, axis: usize) -> &[f64] {
        let n = self.grid.n_vertices();
        &self.values[axis * n..(axis + 1) * n]
    }

    pub fn dot(&self, other: &EdgeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_is_checked() {
        let g = TorusGrid::new(2, 3, 1.0).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 8]).is_err());
        assert!(ScalarField::new(g, vec![0.0; 9]).is_ok());
        assert!(EdgeField::new(g, vec![0.0; 9]).is_err());
        assert!(EdgeField::new(g, vec![0.0; 18]).is_ok());
    }

    #[test]
    fn density_validation() {
        let g = TorusGrid::new(1, 4, 1.0).unwrap();
        let ok = ScalarField::new(g, vec![0.25; 4]).unwrap();
        assert!(DensityField::new(ok).is_ok());
        let bad_sum = ScalarField::new(g, vec![0.3; 4]).unwrap();
        assert!(DensityField::new(bad_sum).is_err());
        let negative = ScalarField::new(g, vec![-0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(DensityField::new(negative).is_err());
        let uni = DensityField::uniform(g);
        assert!((uni.field().sum() - 1.0).abs() < 1e-15);
    }
}
