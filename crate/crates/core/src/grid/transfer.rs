use super::{ScalarField, TorusGrid};
use crate::error::{HjdError, Result};

/// How a field transforms under restriction to a coarser grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Cell masses: full weighting, the transpose of linear interpolation.
    /// Conserves the total sum.
    Density,
    /// Point values: injection at coincident vertices.
    Potential,
}

/// Nested periodic grids, coarsest first, `m` doubling per level.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelHierarchy {
    levels: Vec<TorusGrid>,
}

impl MultilevelHierarchy {
    /// Builds `n_levels` grids ending at `finest`. The finest point count must
    /// be divisible by `2^(n_levels - 1)` with at least 2 points on the
    /// coarsest grid.
    pub fn new(finest: TorusGrid, n_levels: usize) -> Result<Self> {
        if n_levels == 0 {
            return Err(HjdError::InvalidArgument("need at least one level".into()));
        }
        let factor = 1usize << (n_levels - 1);
        let m = finest.m_per_axis();
        if !m.is_multiple_of(factor) || m / factor < 2 {
            return Err(HjdError::InvalidArgument(format!(
                "{m} points per axis cannot be halved {} times",
                n_levels - 1
            )));
        }
        let levels = (0..n_levels)
            .map(|l| {
                let coarse_m = m >> (n_levels - 1 - l);
                TorusGrid::new(finest.dim(), coarse_m, finest.side())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultilevelHierarchy { levels })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> Result<&TorusGrid> {
        self.levels.get(l).ok_or(HjdError::InvalidLevel {
            level: l,
            levels: self.levels.len(),
        })
    }

    pub fn levels(&self) -> &[TorusGrid] {
        &self.levels
    }

    pub fn finest(&self) -> &TorusGrid {
        self.levels.last().expect("hierarchy is nonempty")
    }

    /// Relative mesh size `h_l = 2^-l`.
    pub fn step_size(&self, l: usize) -> f64 {
        0.5f64.powi(l as i32)
    }

    fn check_field(&self, field: &ScalarField, level: usize) -> Result<()> {
        if self.level(level)? != field.grid() {
            return Err(HjdError::GridMismatch);
        }
        Ok(())
    }
}

/// Moves `fine` from `from_level` down to the coarser `to_level`.
pub fn restrict(
    fine: &ScalarField,
    hierarchy: &MultilevelHierarchy,
    from_level: usize,
    to_level: usize,
    kind: FieldKind,
) -> Result<ScalarField> {
    hierarchy.check_field(fine, from_level)?;
    hierarchy.level(to_level)?;
    if to_level >= from_level {
        return Err(HjdError::InvalidLevel {
            level: to_level,
            levels: hierarchy.n_levels(),
        });
    }
    let mut current = fine.clone();
    for l in (to_level..from_level).rev() {
        let coarse = *hierarchy.level(l)?;
        current = match kind {
            FieldKind::Density => restrict_full_weighting(&current, coarse),
            FieldKind::Potential => restrict_injection(&current, coarse),
        };
    }
    Ok(current)
}

/// Moves `coarse` from `from_level` up to the finer `to_level` by periodic
/// multilinear interpolation.
pub fn extend(
    coarse: &ScalarField,
    hierarchy: &MultilevelHierarchy,
    from_level: usize,
    to_level: usize,
) -> Result<ScalarField> {
    hierarchy.check_field(coarse, from_level)?;
    hierarchy.level(to_level)?;
    if to_level <= from_level {
        return Err(HjdError::InvalidLevel {
            level: to_level,
            levels: hierarchy.n_levels(),
        });
    }
    let mut current = coarse.clone();
    for l in from_level + 1..=to_level {
        current = interpolate(&current, *hierarchy.level(l)?);
    }
    Ok(current)
}

/// Interpolation stencil of one fine vertex: up to `2^d` coarse parents and
/// their weights.
fn parents(fine: &TorusGrid, coarse: &TorusGrid, i: usize) -> Vec<(usize, f64)> {
    let mc = coarse.m_per_axis() as i64;
    let mut out: Vec<(Vec<i64>, f64)> = vec![(Vec::with_capacity(fine.dim()), 1.0)];
    for k in fine.multi_index(i) {
        let k = k as i64;
        let choices: &[(i64, f64)] = if k % 2 == 0 {
            &[(k / 2, 1.0)][..]
        } else {
            &[((k - 1) / 2, 0.5), (((k + 1) / 2) % mc, 0.5)][..]
        };
        out = out
            .into_iter()
            .flat_map(|(idx, w)| {
                choices.iter().map(move |&(c, cw)| {
                    let mut idx = idx.clone();
                    idx.push(c);
                    (idx, w * cw)
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|(idx, w)| (coarse.flat_index(&idx), w))
        .collect()
}

fn interpolate(coarse: &ScalarField, fine_grid: TorusGrid) -> ScalarField {
    let cg = *coarse.grid();
    let cv = coarse.values();
    let mut out = vec![0.0; fine_grid.n_vertices()];
    crate::par::fill_indexed(&mut out, |i| {
        parents(&fine_grid, &cg, i)
            .into_iter()
            .map(|(j, w)| w * cv[j])
            .sum()
    });
    ScalarField::new(fine_grid, out).expect("vertex count matches grid")
}

fn restrict_full_weighting(fine: &ScalarField, coarse_grid: TorusGrid) -> ScalarField {
    let fg = *fine.grid();
    let mut out = vec![0.0; coarse_grid.n_vertices()];
    for (i, &v) in fine.values().iter().enumerate() {
        for (j, w) in parents(&fg, &coarse_grid, i) {
            out[j] += w * v;
        }
    }
    ScalarField::new(coarse_grid, out).expect("vertex count matches grid")
}

fn restrict_injection(fine: &ScalarField, coarse_grid: TorusGrid) -> ScalarField {
    let fg = *fine.grid();
    let fv = fine.values();
    let out = (0..coarse_grid.n_vertices())
        .map(|j| {
            let idx: Vec<i64> = coarse_grid
                .multi_index(j)
                .into_iter()
                .map(|k| 2 * k as i64)
                .collect();
            fv[fg.flat_index(&idx)]
        })
        .collect();
    ScalarField::new(coarse_grid, out).expect("vertex count matches grid")
}
