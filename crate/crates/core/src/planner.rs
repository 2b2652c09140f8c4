//! Candidate fan sampling and risk-aware ranking.
//!
//! Nine candidates combine a lateral intent (left change, keep, right change)
//! with a longitudinal intent (decelerate, maintain, accelerate). Each candidate
//! carries its own Laplace tube, and its safety cost is the largest risk level
//! against any surrounding entity.
//!
//! The tube on a sampled candidate uses the candidate length as the zero-height
//! point and its mean absolute curvature in place of the steering angle.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ego::{EgoField, EgoParams};
use crate::field::{FieldParams, VehicleState};
use crate::geometry::{GeometryError, TrajectoryGeometry};
use crate::grid::GridError;
use crate::interaction::{risk_level, EntityField, MonitorConfig};
use crate::paths::{lane_change_path, smoothstep5, straight_path, Pose};

/// Largest chord length between candidate samples, m.
pub const CANDIDATE_MAX_SPACING: f64 = 0.5;
const JERK_SAMPLES: usize = 401;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("candidate sampling needs a moving vehicle, got velocity {0}")]
    NotMoving(f64),
    #[error("invalid planner config: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LateralIntent {
    LeftChange,
    Keep,
    RightChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LongitudinalIntent {
    Decelerate,
    Maintain,
    Accelerate,
}

impl LateralIntent {
    pub const ALL: [LateralIntent; 3] = [Self::LeftChange, Self::Keep, Self::RightChange];

    fn offset(self, lane_width: f64) -> f64 {
        match self {
            Self::LeftChange => lane_width,
            Self::Keep => 0.0,
            Self::RightChange => -lane_width,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LeftChange => "left",
            Self::Keep => "keep",
            Self::RightChange => "right",
        }
    }
}

impl LongitudinalIntent {
    pub const ALL: [LongitudinalIntent; 3] = [Self::Decelerate, Self::Maintain, Self::Accelerate];

    fn acceleration(self, delta: f64) -> f64 {
        match self {
            Self::Decelerate => -delta,
            Self::Maintain => 0.0,
            Self::Accelerate => delta,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Decelerate => "decel",
            Self::Maintain => "maintain",
            Self::Accelerate => "accel",
        }
    }
}

/// Relative weights of the three criteria; lower totals are better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub safety: f64,
    pub comfort: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub lane_width: f64,
    /// s.
    pub horizon: f64,
    /// m/s^2.
    pub accel_delta: f64,
    pub weights: Weights,
    pub points_per_candidate: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            horizon: 6.0,
            accel_delta: 2.0,
            weights: Weights { safety: 1.0, comfort: 1.0, efficiency: 1.0 },
            points_per_candidate: 101,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(PlannerError::Config(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("lane_width", self.lane_width)?;
        positive("horizon", self.horizon)?;
        positive("accel_delta", self.accel_delta)?;
        let w = self.weights;
        let ws = [w.safety, w.comfort, w.efficiency];
        if ws.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || ws.iter().all(|v| *v == 0.0) {
            return Err(PlannerError::Config(
                "weights must be non-negative and not all zero".into(),
            ));
        }
        if self.points_per_candidate < 50 {
            return Err(PlannerError::Config(format!(
                "points_per_candidate must be >= 50, got {}",
                self.points_per_candidate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CandidateTrajectory {
    pub lateral_intent: LateralIntent,
    pub longitudinal_intent: LongitudinalIntent,
    pub geometry: TrajectoryGeometry,
    pub terminal_speed: f64,
    /// Lateral offset reached at the end, m (left positive).
    pub lateral_offset: f64,
    /// Longitudinal distance covered, m.
    pub travel: f64,
    /// Time until the end of the candidate, s.
    pub duration: f64,
    pub initial_speed: f64,
    pub acceleration: f64,
}

impl CandidateTrajectory {
    pub fn label(&self) -> String {
        format!("{}_{}", self.lateral_intent.as_str(), self.longitudinal_intent.as_str())
    }

    /// Largest `|d^3 y / dt^3|` of the lateral quintic along the speed profile.
    pub fn peak_lateral_jerk(&self) -> f64 {
        let w = self.lateral_offset;
        if w == 0.0 {
            return 0.0;
        }
        let s = self.travel;
        let (v0, a) = (self.initial_speed, self.acceleration);
        (0..JERK_SAMPLES)
            .map(|k| {
                let t = self.duration * k as f64 / (JERK_SAMPLES - 1) as f64;
                let x = (v0 * t + 0.5 * a * t * t).clamp(0.0, s);
                let xdot = (v0 + a * t).max(0.0);
                let u = x / s;
                let d2 = w / (s * s) * (60.0 * u - 180.0 * u * u + 120.0 * u * u * u);
                let d3 = w / (s * s * s) * (60.0 - 360.0 * u + 360.0 * u * u);
                (d3 * xdot.powi(3) + 3.0 * d2 * xdot * a).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Constant-acceleration travel over `horizon`, truncated at standstill.
/// Returns `(distance, duration, terminal_speed)`.
pub fn longitudinal_profile(v0: f64, accel: f64, horizon: f64) -> (f64, f64, f64) {
    let v_end = v0 + accel * horizon;
    if v_end >= 0.0 {
        (v0 * horizon + 0.5 * accel * horizon * horizon, horizon, v_end)
    } else {
        let t_stop = v0 / -accel;
        (v0 * t_stop + 0.5 * accel * t_stop * t_stop, t_stop, 0.0)
    }
}

pub fn sample_candidates(
    state: &VehicleState,
    config: &PlannerConfig,
) -> Result<Vec<CandidateTrajectory>, PlannerError> {
    config.validate()?;
    if !(state.velocity > 0.0) {
        return Err(PlannerError::NotMoving(state.velocity));
    }
    let pose = Pose::new(state.position, state.heading);
    let mut out = Vec::with_capacity(9);
    for lat in LateralIntent::ALL {
        for lon in LongitudinalIntent::ALL {
            let accel = lon.acceleration(config.accel_delta);
            let (travel, duration, terminal_speed) =
                longitudinal_profile(state.velocity, accel, config.horizon);
            let offset = lat.offset(config.lane_width);
            let geometry = if offset == 0.0 {
                straight_path(pose, travel, travel / (config.points_per_candidate - 1) as f64)?
            } else {
                lane_change_path(
                    pose,
                    travel,
                    offset,
                    config.points_per_candidate,
                    CANDIDATE_MAX_SPACING,
                )?
            };
            out.push(CandidateTrajectory {
                lateral_intent: lat,
                longitudinal_intent: lon,
                geometry,
                terminal_speed,
                lateral_offset: offset,
                travel,
                duration,
                initial_speed: state.velocity,
                acceleration: accel,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSummary {
    pub lateral_intent: LateralIntent,
    pub longitudinal_intent: LongitudinalIntent,
    pub terminal_speed: f64,
    pub length: f64,
    pub mean_abs_curvature: f64,
    pub peak_lateral_jerk: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateScore {
    pub candidate: CandidateSummary,
    #[serde(rename = "F_per_entity")]
    pub f_per_entity: BTreeMap<String, f64>,
    #[serde(rename = "F_max")]
    pub f_max: f64,
    pub comfort: f64,
    pub efficiency: f64,
    pub total: f64,
}

/// Ego field built directly on a candidate.
pub fn candidate_field(
    candidate: &CandidateTrajectory,
    state: &VehicleState,
    ego_params: &EgoParams,
    field_params: &FieldParams,
) -> EgoField {
    EgoField::on_candidate(candidate.geometry.clone(), state, ego_params, field_params)
}

/// Risk level of one candidate against every entity.
pub fn candidate_risk(
    candidate: &CandidateTrajectory,
    ego_id: &str,
    entities: &[EntityField],
    state: &VehicleState,
    ego_params: &EgoParams,
    field_params: &FieldParams,
    monitor: &MonitorConfig,
) -> Result<BTreeMap<String, f64>, PlannerError> {
    let ego = EntityField::ego(
        ego_id,
        state.position,
        candidate_field(candidate, state, ego_params, field_params),
    );
    entities
        .iter()
        .map(|e| Ok((e.id.clone(), risk_level(&ego, e, monitor)?.f)))
        .collect()
}

fn normalized(value: f64, max: f64) -> f64 {
    if max > 0.0 {
        value / max
    } else {
        0.0
    }
}

/// Scores all candidates; criteria are normalized across the set before weighting.
#[allow(clippy::too_many_arguments)]
pub fn score_candidates(
    candidates: &[CandidateTrajectory],
    ego_id: &str,
    entities: &[EntityField],
    state: &VehicleState,
    ego_params: &EgoParams,
    field_params: &FieldParams,
    config: &PlannerConfig,
    monitor: &MonitorConfig,
) -> Result<Vec<CandidateScore>, PlannerError> {
    let risks = candidates
        .par_iter()
        .map(|c| candidate_risk(c, ego_id, entities, state, ego_params, field_params, monitor))
        .collect::<Result<Vec<_>, _>>()?;
    let f_max: Vec<f64> = risks.iter().map(|r| r.values().copied().fold(0.0, f64::max)).collect();
    let jerk: Vec<f64> = candidates.iter().map(|c| c.peak_lateral_jerk()).collect();
    Ok(combine(candidates, risks, &f_max, &jerk, &config.weights))
}

fn combine(
    candidates: &[CandidateTrajectory],
    risks: Vec<BTreeMap<String, f64>>,
    f_max: &[f64],
    jerk: &[f64],
    w: &Weights,
) -> Vec<CandidateScore> {
    let top_f = f_max.iter().copied().fold(0.0, f64::max);
    let top_jerk = jerk.iter().copied().fold(0.0, f64::max);
    let top_speed = candidates.iter().map(|c| c.terminal_speed).fold(0.0, f64::max);
    candidates
        .iter()
        .zip(risks)
        .enumerate()
        .map(|(k, (c, f_per_entity))| {
            let comfort = normalized(jerk[k], top_jerk);
            let efficiency = 1.0 - normalized(c.terminal_speed, top_speed);
            let total = w.safety * normalized(f_max[k], top_f) + w.comfort * comfort + w.efficiency * efficiency;
            CandidateScore {
                candidate: CandidateSummary {
                    lateral_intent: c.lateral_intent,
                    longitudinal_intent: c.longitudinal_intent,
                    terminal_speed: c.terminal_speed,
                    length: c.geometry.total_length(),
                    mean_abs_curvature: c.geometry.mean_abs_curvature(),
                    peak_lateral_jerk: jerk[k],
                },
                f_per_entity,
                f_max: f_max[k],
                comfort,
                efficiency,
                total,
            }
        })
        .collect()
}

/// Ascending by total, then `F_max`, then intent order.
pub fn rank_candidates(mut scores: Vec<CandidateScore>) -> Vec<CandidateScore> {
    scores.sort_by(|a, b| {
        a.total
            .total_cmp(&b.total)
            .then(a.f_max.total_cmp(&b.f_max))
            .then(a.candidate.lateral_intent.cmp(&b.candidate.lateral_intent))
            .then(a.candidate.longitudinal_intent.cmp(&b.candidate.longitudinal_intent))
    });
    scores
}

/// Lateral offset of the quintic at fraction `u` of the travel.
pub fn lateral_profile(offset: f64, u: f64) -> f64 {
    offset * smoothstep5(u)
}
