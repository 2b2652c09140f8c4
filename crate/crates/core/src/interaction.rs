//! Pairwise interaction risk and threshold monitoring.
//!
//! The interaction risk of two entities is the pointwise product of their
//! fields; the risk level `F` is its maximum over the plane. The maximum is
//! located on a grid spanning the overlap of both support boxes and then
//! refined locally around the best coarse peaks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ego::EgoField;
use crate::field::PredictedField;
use crate::grid::{GridError, GridSpec, RiskGrid, DEFAULT_CELL_BUDGET};
use crate::math::{BBox, Vec2};

/// Number of distinct coarse peaks refined by [`risk_level`].
pub const REFINED_PEAKS: usize = 3;
/// Halvings of the coarse grid tried when every coarse cell is zero.
pub const ZERO_RESCANS: u32 = 2;

#[derive(Debug, Clone)]
pub enum FieldModel {
    Predicted(PredictedField),
    Ego(EgoField),
}

/// The field of one traffic entity with its identifier and support box.
#[derive(Debug, Clone)]
pub struct EntityField {
    pub id: String,
    /// Current position, used to place reports of non-overlapping pairs.
    pub position: Vec2,
    model: FieldModel,
    support: Option<BBox>,
}

impl EntityField {
    pub fn predicted(id: impl Into<String>, position: Vec2, field: PredictedField) -> Self {
        let support = field.support_hint();
        Self { id: id.into(), position, model: FieldModel::Predicted(field), support }
    }

    pub fn ego(id: impl Into<String>, position: Vec2, field: EgoField) -> Self {
        let support = field.support_hint();
        Self { id: id.into(), position, model: FieldModel::Ego(field), support }
    }

    #[inline]
    pub fn evaluate(&self, point: Vec2) -> f64 {
        match &self.model {
            FieldModel::Predicted(f) => f.evaluate(point),
            FieldModel::Ego(f) => f.evaluate(point),
        }
    }

    /// `None` when the field is identically zero.
    pub fn support_hint(&self) -> Option<BBox> {
        self.support
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    /// Multiplies the field by a positive constant.
    pub fn scaled(&self, factor: f64) -> EntityField {
        let mut out = self.clone();
        match &mut out.model {
            FieldModel::Predicted(f) => f.virtual_mass *= factor,
            FieldModel::Ego(f) => f.virtual_mass *= factor,
        }
        out.support = match &out.model {
            FieldModel::Predicted(f) => f.support_hint(),
            FieldModel::Ego(f) => f.support_hint(),
        };
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    /// Alert threshold on `F`.
    pub threshold: f64,
    /// Coarse grid cell size, m.
    #[serde(default = "default_resolution")]
    pub grid_resolution: f64,
    #[serde(default = "default_refinement")]
    pub refinement_levels: u32,
    #[serde(default = "default_budget")]
    pub cell_budget: usize,
}

fn default_resolution() -> f64 {
    1.0
}
fn default_refinement() -> u32 {
    6
}
fn default_budget() -> usize {
    DEFAULT_CELL_BUDGET
}

impl MonitorConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            grid_resolution: default_resolution(),
            refinement_levels: default_refinement(),
            cell_budget: default_budget(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(format!("threshold must be >= 0, got {}", self.threshold));
        }
        if !(self.grid_resolution.is_finite() && self.grid_resolution > 0.0) {
            return Err(format!("grid_resolution must be > 0, got {}", self.grid_resolution));
        }
        Ok(())
    }
}

/// Risk level of one entity pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub pair: (String, String),
    #[serde(rename = "F")]
    pub f: f64,
    pub argmax_point: Vec2,
    pub exceeds_threshold: bool,
    pub grid_resolution_used: f64,
}

#[inline]
pub fn interaction_risk_at(a: &EntityField, b: &EntityField, point: Vec2) -> f64 {
    let fa = a.evaluate(point);
    if fa == 0.0 {
        return 0.0;
    }
    fa * b.evaluate(point)
}

/// Overlap of both support boxes, `None` if either field is empty or they are disjoint.
pub fn support_overlap(a: &EntityField, b: &EntityField) -> Option<BBox> {
    a.support_hint()?.intersect(b.support_hint()?)
}

/// Interaction risk sampled on `spec`; cells outside the support overlap are 0.
pub fn interaction_risk_grid(
    a: &EntityField,
    b: &EntityField,
    spec: GridSpec,
    budget: usize,
) -> Result<RiskGrid, GridError> {
    let Some(overlap) = support_overlap(a, b) else {
        spec.validate(budget)?;
        return Ok(RiskGrid::zeros(spec));
    };
    RiskGrid::evaluate(spec, budget, |p| {
        if overlap.contains(p) {
            interaction_risk_at(a, b, p)
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    value: f64,
    point: Vec2,
    resolution: f64,
}

fn refine(a: &EntityField, b: &EntityField, start: Peak, levels: u32) -> Peak {
    let mut best = start;
    let mut center = start.point;
    let mut res = start.resolution;
    for _ in 0..levels {
        let half = 0.5 * res;
        let spec = GridSpec {
            origin: Vec2::new(center.x - 1.5 * res, center.y - 1.5 * res),
            resolution: half,
            width: 6,
            height: 6,
        };
        let mut local: Option<Peak> = None;
        for j in 0..spec.height {
            for i in 0..spec.width {
                let p = spec.cell_center(i, j);
                let v = interaction_risk_at(a, b, p);
                if local.is_none_or(|l| v > l.value) {
                    local = Some(Peak { value: v, point: p, resolution: half });
                }
            }
        }
        let local = local.expect("non-empty refinement grid");
        if local.value > best.value {
            best = local;
        }
        best.resolution = half;
        center = best.point;
        res = half;
    }
    best
}

/// Distinct coarse local maxima, best first; ties by `(i, j)`.
fn coarse_peaks(grid: &RiskGrid, count: usize) -> Vec<(f64, usize, usize)> {
    let (w, h) = (grid.spec.width, grid.spec.height);
    let mut peaks = Vec::new();
    for j in 0..h {
        for i in 0..w {
            let v = grid.get(i, j);
            if v <= 0.0 {
                continue;
            }
            let mut is_peak = true;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= w as i64 || nj >= h as i64 {
                        continue;
                    }
                    if grid.get(ni as usize, nj as usize) > v {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                peaks.push((v, i, j));
            }
        }
    }
    peaks.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    peaks.truncate(count);
    peaks
}

/// Risk level `F = max IR` for one pair.
pub fn risk_level(
    a: &EntityField,
    b: &EntityField,
    config: &MonitorConfig,
) -> Result<RiskReport, GridError> {
    let pair = (a.id.clone(), b.id.clone());
    let report = |f: f64, argmax_point: Vec2, res: f64| RiskReport {
        pair: pair.clone(),
        f,
        argmax_point,
        exceeds_threshold: f > config.threshold,
        grid_resolution_used: res,
    };
    let Some(overlap) = support_overlap(a, b) else {
        let mid = (a.position + b.position) * 0.5;
        return Ok(report(0.0, mid, config.grid_resolution));
    };

    let mut spec = GridSpec::covering_aligned(overlap, config.grid_resolution);
    let mut grid = interaction_risk_grid(a, b, spec, config.cell_budget)?;
    // thin slivers of nonzero risk can fall between coarse samples
    for _ in 0..ZERO_RESCANS {
        if grid.max_value() > 0.0 {
            break;
        }
        let finer = GridSpec::covering_aligned(overlap, 0.5 * spec.resolution);
        if finer.cell_count() > config.cell_budget {
            break;
        }
        spec = finer;
        grid = interaction_risk_grid(a, b, spec, config.cell_budget)?;
    }
    let coarse = grid.argmax();
    if coarse.value <= 0.0 {
        return Ok(report(0.0, overlap.center(), spec.resolution));
    }

    let mut best = Peak { value: coarse.value, point: coarse.center, resolution: spec.resolution };
    let mut best_res = spec.resolution;
    // fields peak where their paths begin, next to the zero region behind them
    let starts = [a.position, b.position]
        .into_iter()
        .filter(|p| overlap.contains(*p))
        .map(|p| Peak { value: interaction_risk_at(a, b, p), point: p, resolution: spec.resolution });
    let peaks = coarse_peaks(&grid, REFINED_PEAKS)
        .into_iter()
        .map(|(value, i, j)| Peak { value, point: spec.cell_center(i, j), resolution: spec.resolution });
    for start in peaks.chain(starts) {
        let refined = refine(a, b, start, config.refinement_levels);
        best_res = refined.resolution;
        if refined.value > best.value {
            best = refined;
        }
    }
    Ok(report(best.value, best.point, best_res))
}

/// Reports for every unordered pair, sorted by `F` descending then by pair ids.
pub fn monitor_all(entities: &[EntityField], config: &MonitorConfig) -> Result<Vec<RiskReport>, GridError> {
    let pairs: Vec<(usize, usize)> = (0..entities.len())
        .flat_map(|i| (i + 1..entities.len()).map(move |j| (i, j)))
        .collect();
    let mut reports = pairs
        .par_iter()
        .map(|&(i, j)| risk_level(&entities[i], &entities[j], config))
        .collect::<Result<Vec<_>, _>>()?;
    sort_reports(&mut reports);
    Ok(reports)
}

pub fn sort_reports(reports: &mut [RiskReport]) {
    reports.sort_by(|x, y| y.f.total_cmp(&x.f).then_with(|| x.pair.cmp(&y.pair)));
}
