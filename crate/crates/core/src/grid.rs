//! Rectangular sampled scalar fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{BBox, Vec2};

/// Default upper bound on the number of cells evaluated in one grid.
pub const DEFAULT_CELL_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
    #[error("grid of {cells} cells exceeds the budget of {budget} cells")]
    BudgetExceeded { cells: usize, budget: usize },
}

/// Placement of a grid: cell `(i, j)` has center `origin + ((i+0.5) res, (j+0.5) res)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Vec2,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Smallest grid anchored at `bbox.min` whose cells cover `bbox`.
    pub fn covering(bbox: BBox, resolution: f64) -> GridSpec {
        let cells = |extent: f64| ((extent / resolution).ceil() as usize).max(1);
        GridSpec {
            origin: bbox.min,
            resolution,
            width: cells(bbox.width()),
            height: cells(bbox.height()),
        }
    }

    /// Covering grid whose cell edges lie on multiples of `resolution`, so
    /// overlapping boxes share sample points.
    pub fn covering_aligned(bbox: BBox, resolution: f64) -> GridSpec {
        let i0 = (bbox.min.x / resolution).floor();
        let j0 = (bbox.min.y / resolution).floor();
        let cells = |lo: f64, hi: f64| (((hi / resolution).ceil() - lo) as usize).max(1);
        GridSpec {
            origin: Vec2::new(i0 * resolution, j0 * resolution),
            resolution,
            width: cells(i0, bbox.max.x),
            height: cells(j0, bbox.max.y),
        }
    }

    pub fn cell_count(&self) -> usize {
        self.width.saturating_mul(self.height)
    }

    pub fn validate(&self, budget: usize) -> Result<(), GridError> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(GridError::Invalid(format!("resolution must be > 0, got {}", self.resolution)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GridError::Invalid("width and height must be positive".into()));
        }
        if !self.origin.is_finite() {
            return Err(GridError::Invalid("origin must be finite".into()));
        }
        let cells = self.cell_count();
        if cells > budget {
            return Err(GridError::BudgetExceeded { cells, budget });
        }
        Ok(())
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            min: self.origin,
            max: Vec2::new(
                self.origin.x + self.width as f64 * self.resolution,
                self.origin.y + self.height as f64 * self.resolution,
            ),
        }
    }
}

/// Row-major samples of a non-negative field; index `j * width + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

/// Maximum cell with its indices; ties go to the smallest `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub value: f64,
    pub i: usize,
    pub j: usize,
    pub center: Vec2,
}

impl RiskGrid {
    /// Evaluates `f` at every cell center. Rows are computed in parallel; the
    /// result does not depend on the schedule.
    pub fn evaluate<F>(spec: GridSpec, budget: usize, f: F) -> Result<RiskGrid, GridError>
    where
        F: Fn(Vec2) -> f64 + Sync,
    {
        spec.validate(budget)?;
        let mut values = vec![0.0; spec.cell_count()];
        values
            .par_chunks_mut(spec.width)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = f(spec.cell_center(i, j));
                }
            });
        Ok(RiskGrid { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> RiskGrid {
        RiskGrid { values: vec![0.0; spec.cell_count()], spec }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.width + i]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn argmax(&self) -> GridMax {
        let mut best = GridMax { value: f64::NEG_INFINITY, i: 0, j: 0, center: Vec2::ZERO };
        for j in 0..self.spec.height {
            for i in 0..self.spec.width {
                let v = self.get(i, j);
                if v > best.value || (v == best.value && (i, j) < (best.i, best.j)) {
                    best = GridMax { value: v, i, j, center: Vec2::ZERO };
                }
            }
        }
        best.center = self.spec.cell_center(best.i, best.j);
        best
    }

    /// Cellwise maximum with another grid of identical layout.
    pub fn max_with(&mut self, other: &RiskGrid) {
        debug_assert_eq!(self.spec, other.spec);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a = a.max(*b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_covering_snaps_to_lattice() {
        let b = BBox { min: Vec2::new(-1.3, 0.2), max: Vec2::new(2.1, 0.9) };
        let g = GridSpec::covering_aligned(b, 0.5);
        assert_eq!(g.origin, Vec2::new(-1.5, 0.0));
        assert_eq!((g.width, g.height), (8, 2));
        let gb = g.bbox();
        assert!(gb.min.x <= b.min.x && gb.max.x >= b.max.x && gb.max.y >= b.max.y);
    }

    #[test]
    fn cell_centers_and_layout() {
        let spec = GridSpec { origin: Vec2::new(-1.0, 2.0), resolution: 0.5, width: 3, height: 2 };
        let g = RiskGrid::evaluate(spec, 100, |p| p.x + 10.0 * p.y).unwrap();
        assert_eq!(spec.cell_center(0, 0), Vec2::new(-0.75, 2.25));
        assert_eq!(g.get(2, 1), spec.cell_center(2, 1).x + 10.0 * spec.cell_center(2, 1).y);
        assert_eq!(g.values.len(), 6);
    }

    #[test]
    fn budget_and_validation() {
        let spec = GridSpec { origin: Vec2::ZERO, resolution: 0.1, width: 3000, height: 2000 };
        assert_eq!(
            spec.validate(DEFAULT_CELL_BUDGET),
            Err(GridError::BudgetExceeded { cells: 6_000_000, budget: DEFAULT_CELL_BUDGET })
        );
        let bad = GridSpec { resolution: 0.0, ..spec };
        assert!(matches!(bad.validate(DEFAULT_CELL_BUDGET), Err(GridError::Invalid(_))));
    }

    #[test]
    fn argmax_ties_prefer_smallest_indices() {
        let spec = GridSpec { origin: Vec2::ZERO, resolution: 1.0, width: 3, height: 3 };
        let g = RiskGrid::evaluate(spec, 100, |p| if p.x > 1.0 || p.y > 1.0 { 1.0 } else { 0.0 })
            .unwrap();
        let m = g.argmax();
        assert_eq!((m.i, m.j, m.value), (0, 1, 1.0));
    }

    #[test]
    fn covering_grid_contains_box() {
        let b = BBox { min: Vec2::new(0.0, 0.0), max: Vec2::new(10.1, 3.0) };
        let spec = GridSpec::covering(b, 0.5);
        assert_eq!((spec.width, spec.height), (21, 6));
        assert!(spec.bbox().max.x >= b.max.x);
    }
}
