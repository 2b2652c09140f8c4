//! Driving risk probability along predicted trajectories, virtual mass, and the
//! enhanced driving risk field of one traffic entity.
//!
//! Each predicted trajectory contributes a tube with Gaussian cross-section:
//! height `a(s) = q (s - s_pt)^2` falls to zero at the path end and width
//! `sigma(s) = (b + k * kbar) s + c` widens with arc length and with the path's
//! mean absolute curvature `kbar`. Modes are mixed with their probabilities and
//! scaled by the entity's virtual mass `m T (alpha v^beta + gamma)`.
//!
//! Points whose projection falls before the start or past the end of a path get
//! zero probability from that path.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::TrajectoryGeometry;
use crate::grid::{GridError, GridSpec, RiskGrid};
use crate::math::{BBox, Vec2};

/// Largest number of modes accepted in one prediction.
pub const MAX_MODES: usize = 16;
/// Probability sums within this distance of 1 are renormalized; beyond it they are rejected.
pub const PROBABILITY_SLACK: f64 = 0.05;
/// Field values below this are treated as outside an entity's support.
pub const SUPPORT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("parameter {name} = {value} violates {rule}")]
    Parameter { name: &'static str, value: f64, rule: &'static str },
    #[error("prediction needs between 1 and {MAX_MODES} modes, got {0}")]
    ModeCount(usize),
    #[error("mode {index} probability {value} is not a finite non-negative number")]
    Probability { index: usize, value: f64 },
    #[error("mode probabilities sum to {0}, more than {PROBABILITY_SLACK} away from 1")]
    ProbabilitySum(f64),
}

/// Constants of the Gaussian-tube model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldParams {
    /// Parabola steepness of the height profile, 1/m^2.
    pub q: f64,
    /// Base width slope.
    pub b: f64,
    /// Curvature-to-slope gain, m.
    pub k: f64,
    /// Initial width, m.
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            q: 0.0001,
            b: 0.04,
            k: 1.0,
            c: 0.5,
            alpha: 1.566e-14,
            beta: 6.687,
            gamma: 0.3345,
        }
    }
}

pub(crate) fn check(name: &'static str, value: f64, ok: bool, rule: &'static str) -> Result<(), FieldError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(FieldError::Parameter { name, value, rule })
    }
}

impl FieldParams {
    pub fn validate(&self) -> Result<(), FieldError> {
        check("q", self.q, self.q > 0.0, "q > 0")?;
        check("b", self.b, self.b >= 0.0, "b >= 0")?;
        check("k", self.k, self.k >= 0.0, "k >= 0")?;
        check("c", self.c, self.c > 0.0, "c > 0")?;
        check("alpha", self.alpha, self.alpha >= 0.0, "alpha >= 0")?;
        check("beta", self.beta, true, "finite")?;
        check("gamma", self.gamma, self.gamma >= 0.0, "gamma >= 0")
    }

    /// Height of the cross-section at arc length `s` on a path of length `s_pt`.
    ///
    /// Panics when `s` lies outside `[0, s_pt]`.
    pub fn gaussian_height(&self, s: f64, s_pt: f64) -> f64 {
        assert!((0.0..=s_pt).contains(&s), "arc length {s} outside [0, {s_pt}]");
        let r = s - s_pt;
        self.q * r * r
    }

    /// Standard deviation of the cross-section at arc length `s`.
    pub fn gaussian_width(&self, s: f64, mean_abs_curvature: f64) -> f64 {
        (self.b + self.k * mean_abs_curvature) * s + self.c
    }

    /// `m T (alpha v^beta + gamma)`.
    pub fn virtual_mass(&self, state: &VehicleState) -> f64 {
        state.mass * state.type_factor * (self.alpha * state.velocity.powf(self.beta) + self.gamma)
    }
}

/// Kinematic state of a traffic entity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec2,
    /// Radians, CCW from +x.
    pub heading: f64,
    /// m/s.
    pub velocity: f64,
    /// Front-wheel angle, radians; positive steers left.
    pub steering_angle: f64,
    pub wheelbase: f64,
    /// kg.
    pub mass: f64,
    pub type_factor: f64,
}

impl VehicleState {
    /// A 1500 kg passenger car with a 2.8 m wheelbase.
    pub fn passenger_car(position: Vec2, heading: f64, velocity: f64) -> Self {
        Self {
            position,
            heading,
            velocity,
            steering_angle: 0.0,
            wheelbase: 2.8,
            mass: 1500.0,
            type_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        check("position.x", self.position.x, true, "finite")?;
        check("position.y", self.position.y, true, "finite")?;
        check("heading", self.heading, true, "finite")?;
        check("velocity", self.velocity, self.velocity >= 0.0, "velocity >= 0")?;
        check(
            "steering_angle",
            self.steering_angle,
            self.steering_angle.abs() < std::f64::consts::FRAC_PI_2,
            "|steering_angle| < pi/2",
        )?;
        check("wheelbase", self.wheelbase, self.wheelbase > 0.0, "wheelbase > 0")?;
        check("mass", self.mass, self.mass > 0.0, "mass > 0")?;
        check("type_factor", self.type_factor, self.type_factor > 0.0, "type_factor > 0")
    }
}

/// One predicted path and its mode probability.
#[derive(Debug, Clone)]
pub struct PredictedTrajectory {
    pub geometry: TrajectoryGeometry,
    pub probability: f64,
}

impl PredictedTrajectory {
    pub fn new(geometry: TrajectoryGeometry, probability: f64) -> Self {
        Self { geometry, probability }
    }
}

/// A set of predicted modes whose probabilities sum to 1.
#[derive(Debug, Clone)]
pub struct MultimodalPrediction {
    modes: Vec<PredictedTrajectory>,
}

impl MultimodalPrediction {
    /// Validates and renormalizes the mode probabilities.
    pub fn new(mut modes: Vec<PredictedTrajectory>) -> Result<Self, FieldError> {
        if modes.is_empty() || modes.len() > MAX_MODES {
            return Err(FieldError::ModeCount(modes.len()));
        }
        for (index, m) in modes.iter().enumerate() {
            if !(m.probability.is_finite() && m.probability >= 0.0) {
                return Err(FieldError::Probability { index, value: m.probability });
            }
        }
        let sum: f64 = modes.iter().map(|m| m.probability).sum();
        if !((sum - 1.0).abs() <= PROBABILITY_SLACK) {
            return Err(FieldError::ProbabilitySum(sum));
        }
        for m in &mut modes {
            m.probability /= sum;
        }
        Ok(Self { modes })
    }

    pub fn single(geometry: TrajectoryGeometry) -> Self {
        Self { modes: vec![PredictedTrajectory::new(geometry, 1.0)] }
    }

    pub fn modes(&self) -> &[PredictedTrajectory] {
        &self.modes
    }
}

/// Driving risk probability of a single trajectory at `point` (probability not applied).
pub fn drp_single(params: &FieldParams, traj: &PredictedTrajectory, point: Vec2) -> f64 {
    let g = &traj.geometry;
    let f = g.to_frenet(point);
    if !f.inside {
        return 0.0;
    }
    let height = params.gaussian_height(f.s, g.total_length());
    if height == 0.0 {
        return 0.0;
    }
    let sigma = params.gaussian_width(f.s, g.mean_abs_curvature());
    height * (-(f.d * f.d) / (2.0 * sigma * sigma)).exp()
}

/// Probability-weighted sum of the per-mode fields.
pub fn drp_complete(params: &FieldParams, pred: &MultimodalPrediction, point: Vec2) -> f64 {
    pred.modes
        .iter()
        .map(|m| m.probability * drp_single(params, m, point))
        .sum()
}

pub fn virtual_mass(params: &FieldParams, state: &VehicleState) -> f64 {
    params.virtual_mass(state)
}

/// Enhanced driving risk field of one entity at `point`.
pub fn edrf_at(
    params: &FieldParams,
    pred: &MultimodalPrediction,
    state: &VehicleState,
    point: Vec2,
) -> f64 {
    drp_complete(params, pred, point) * virtual_mass(params, state)
}

/// [`edrf_at`] sampled at every cell center of `spec`.
pub fn edrf_grid(
    params: &FieldParams,
    pred: &MultimodalPrediction,
    state: &VehicleState,
    spec: GridSpec,
    budget: usize,
) -> Result<RiskGrid, GridError> {
    RiskGrid::evaluate(spec, budget, |p| edrf_at(params, pred, state, p))
}

/// Gaussian-tube field of a predicted entity with its virtual mass cached.
#[derive(Debug, Clone)]
pub struct PredictedField {
    pub params: FieldParams,
    pub prediction: MultimodalPrediction,
    pub virtual_mass: f64,
}

impl PredictedField {
    pub fn new(params: FieldParams, prediction: MultimodalPrediction, state: &VehicleState) -> Self {
        let virtual_mass = params.virtual_mass(state);
        Self { params, prediction, virtual_mass }
    }

    #[inline]
    pub fn evaluate(&self, point: Vec2) -> f64 {
        drp_complete(&self.params, &self.prediction, point) * self.virtual_mass
    }

    /// Box holding every point where the field can exceed [`SUPPORT_EPSILON`].
    ///
    /// Per mode, the vertex box is dilated by the lateral offset at which the
    /// widest cross-section carrying the tallest height drops below the
    /// threshold, times the frame's largest miter length.
    pub fn support_hint(&self) -> Option<BBox> {
        let n = self.prediction.modes.len() as f64;
        let threshold = SUPPORT_EPSILON / n;
        self.prediction
            .modes
            .iter()
            .filter_map(|m| {
                let g = &m.geometry;
                let peak = m.probability * self.params.q * g.total_length().powi(2) * self.virtual_mass;
                if peak <= threshold {
                    return None;
                }
                let sigma_max = self.params.gaussian_width(g.total_length(), g.mean_abs_curvature());
                let radius = sigma_max * (2.0 * (peak / threshold).ln()).sqrt();
                Some(g.bbox().dilate(radius * g.max_miter_norm()))
            })
            .reduce(BBox::union)
    }
}
