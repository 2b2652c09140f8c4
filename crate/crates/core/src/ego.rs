//! Ego-vehicle field: kinematic bicycle extrapolation with a Laplace-like
//! cross-section.
//!
//! The ego path is the arc (or ray) the vehicle traces over `t_la` seconds
//! holding its current speed and steering angle. Its cross-section is
//! `a(s) exp(-|d| / lambda(s))` with a linear height `q_ego |s - s_end|` and
//! width `(b_ego + k_ego * w) s + c_ego`, where `w` is `|steering_angle|` for the
//! kinematic path and the mean absolute curvature for sampled candidates.

use serde::{Deserialize, Serialize};

use crate::field::{check, FieldError, FieldParams, VehicleState, SUPPORT_EPSILON};
use crate::geometry::{GeometryError, TrajectoryGeometry};
use crate::math::{BBox, Vec2};
use crate::paths::{arc_path, straight_path, Pose};

/// `|tan(steering_angle)|` below this is treated as driving straight.
pub const STRAIGHT_TAN_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoParams {
    /// Height slope, 1/m.
    pub q_ego: f64,
    pub b_ego: f64,
    /// m/rad.
    pub k_ego: f64,
    /// m.
    pub c_ego: f64,
    /// Look-ahead horizon, s.
    pub t_la: f64,
    /// Sampling step of the extrapolated path, m.
    pub path_step: f64,
}

impl Default for EgoParams {
    fn default() -> Self {
        Self {
            q_ego: 0.004,
            b_ego: 0.05,
            k_ego: 1.0,
            c_ego: 0.5,
            t_la: 6.0,
            path_step: 0.25,
        }
    }
}

impl EgoParams {
    pub fn validate(&self) -> Result<(), FieldError> {
        check("q_ego", self.q_ego, self.q_ego > 0.0, "q_ego > 0")?;
        check("b_ego", self.b_ego, self.b_ego > 0.0, "b_ego > 0")?;
        check("k_ego", self.k_ego, self.k_ego > 0.0, "k_ego > 0")?;
        check("c_ego", self.c_ego, self.c_ego > 0.0, "c_ego > 0")?;
        check("t_la", self.t_la, self.t_la > 0.0, "t_la > 0")?;
        check(
            "path_step",
            self.path_step,
            self.path_step > 0.0 && self.path_step <= 0.5,
            "0 < path_step <= 0.5",
        )
    }

    /// `q_ego |s - s_end|`; panics outside `[0, s_end]`.
    pub fn ego_height(&self, s: f64, s_end: f64) -> f64 {
        assert!((0.0..=s_end).contains(&s), "arc length {s} outside [0, {s_end}]");
        self.q_ego * (s - s_end).abs()
    }

    /// `(b_ego + k_ego |spread|) s + c_ego`.
    pub fn ego_width(&self, s: f64, spread: f64) -> f64 {
        (self.b_ego + self.k_ego * spread.abs()) * s + self.c_ego
    }
}

/// Turning behaviour from the bicycle model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Turning {
    Straight,
    /// Signed radius, positive for left turns.
    Radius(f64),
}

pub fn turning_radius(state: &VehicleState) -> Turning {
    let t = state.steering_angle.tan();
    if t.abs() < STRAIGHT_TAN_THRESHOLD {
        Turning::Straight
    } else {
        Turning::Radius(state.wheelbase / t)
    }
}

/// Extrapolated ego path.
#[derive(Debug, Clone)]
pub enum EgoPath {
    Stationary,
    Moving(TrajectoryGeometry),
}

pub fn predict_ego_path(state: &VehicleState, params: &EgoParams) -> Result<EgoPath, GeometryError> {
    if state.velocity <= 0.0 {
        return Ok(EgoPath::Stationary);
    }
    let length = state.velocity * params.t_la;
    let pose = Pose::new(state.position, state.heading);
    let geometry = match turning_radius(state) {
        Turning::Straight => straight_path(pose, length, params.path_step)?,
        Turning::Radius(r) => arc_path(pose, r, length, params.path_step)?,
    };
    Ok(EgoPath::Moving(geometry))
}

/// Laplace-like tube along a path.
#[derive(Debug, Clone)]
pub struct LaplaceTube {
    pub params: EgoParams,
    pub geometry: TrajectoryGeometry,
    /// Arc length at which the height reaches zero.
    pub s_end: f64,
    /// Width spread term (|steering angle| or mean absolute curvature).
    pub spread: f64,
}

impl LaplaceTube {
    /// Tube on the kinematic path: `s_end = v t_la`, spread `|steering_angle|`.
    pub fn kinematic(params: EgoParams, geometry: TrajectoryGeometry, state: &VehicleState) -> Self {
        // polyline chords can only be shorter than the arc
        let s_end = (state.velocity * params.t_la).max(geometry.total_length());
        Self { params, geometry, s_end, spread: state.steering_angle }
    }

    /// Tube on a sampled candidate: `s_end` is its length, spread its mean absolute curvature.
    pub fn sampled(params: EgoParams, geometry: TrajectoryGeometry) -> Self {
        let s_end = geometry.total_length();
        let spread = geometry.mean_abs_curvature();
        Self { params, geometry, s_end, spread }
    }

    pub fn drp(&self, point: Vec2) -> f64 {
        let f = self.geometry.to_frenet(point);
        if !f.inside {
            return 0.0;
        }
        let height = self.params.ego_height(f.s, self.s_end);
        if height == 0.0 {
            return 0.0;
        }
        let lambda = self.params.ego_width(f.s, self.spread);
        height * (-f.d.abs() / lambda).exp()
    }

    /// Box holding every point where `drp * mass` can exceed [`SUPPORT_EPSILON`].
    pub fn support_hint(&self, virtual_mass: f64) -> Option<BBox> {
        let peak = self.params.q_ego * self.s_end * virtual_mass;
        if peak <= SUPPORT_EPSILON {
            return None;
        }
        let lambda_max = self.params.ego_width(self.geometry.total_length(), self.spread);
        let radius = lambda_max * (peak / SUPPORT_EPSILON).ln();
        Some(self.geometry.bbox().dilate(radius * self.geometry.max_miter_norm()))
    }
}

/// Ego EDRF with its virtual mass cached; `tube` is `None` when stationary.
#[derive(Debug, Clone)]
pub struct EgoField {
    pub tube: Option<LaplaceTube>,
    pub virtual_mass: f64,
}

impl EgoField {
    pub fn new(
        state: &VehicleState,
        params: &EgoParams,
        field_params: &FieldParams,
    ) -> Result<Self, GeometryError> {
        let tube = match predict_ego_path(state, params)? {
            EgoPath::Stationary => None,
            EgoPath::Moving(g) => Some(LaplaceTube::kinematic(*params, g, state)),
        };
        Ok(Self { tube, virtual_mass: field_params.virtual_mass(state) })
    }

    pub fn on_candidate(
        geometry: TrajectoryGeometry,
        state: &VehicleState,
        params: &EgoParams,
        field_params: &FieldParams,
    ) -> Self {
        Self {
            tube: Some(LaplaceTube::sampled(*params, geometry)),
            virtual_mass: field_params.virtual_mass(state),
        }
    }

    pub fn drp(&self, point: Vec2) -> f64 {
        self.tube.as_ref().map_or(0.0, |t| t.drp(point))
    }

    #[inline]
    pub fn evaluate(&self, point: Vec2) -> f64 {
        self.drp(point) * self.virtual_mass
    }

    pub fn support_hint(&self) -> Option<BBox> {
        self.tube.as_ref().and_then(|t| t.support_hint(self.virtual_mass))
    }
}

pub fn drp_ego(state: &VehicleState, params: &EgoParams, point: Vec2) -> Result<f64, GeometryError> {
    Ok(EgoField::new(state, params, &FieldParams::default())?.drp(point))
}

pub fn edrf_ego_at(
    state: &VehicleState,
    params: &EgoParams,
    field_params: &FieldParams,
    point: Vec2,
) -> Result<f64, GeometryError> {
    Ok(EgoField::new(state, params, field_params)?.evaluate(point))
}
