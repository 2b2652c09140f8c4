//! Template-based multimodal predictor.
//!
//! Stands in for a learned predictor: each template lists mode shapes with
//! probabilities, and every mode starts at the entity pose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, MultimodalPrediction, PredictedTrajectory, VehicleState};
use crate::geometry::{GeometryError, TrajectoryGeometry};
use crate::paths::{arc_path, lane_change_path, straight_path, Pose};

/// Sample spacing of synthetic modes, m.
pub const SYNTHETIC_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeShape {
    Straight,
    LaneChangeLeft,
    LaneChangeRight,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateMode {
    pub shape: ModeShape,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTemplate {
    pub modes: Vec<TemplateMode>,
    /// s.
    pub horizon: f64,
    #[serde(default = "default_lane_width")]
    pub lane_width: f64,
    #[serde(default = "default_turn_radius")]
    pub turn_radius: f64,
}

fn default_lane_width() -> f64 {
    3.5
}
fn default_turn_radius() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("synthetic prediction needs a moving vehicle, got velocity {0}")]
    NotMoving(f64),
    #[error("{name} must be > 0, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl SyntheticTemplate {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        for (name, value) in [
            ("horizon", self.horizon),
            ("lane_width", self.lane_width),
            ("turn_radius", self.turn_radius),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SyntheticError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    fn mode_geometry(&self, shape: ModeShape, pose: Pose, length: f64) -> Result<TrajectoryGeometry, GeometryError> {
        match shape {
            ModeShape::Straight => straight_path(pose, length, SYNTHETIC_STEP),
            ModeShape::LaneChangeLeft => lane_change_path(pose, length, self.lane_width, 101, 0.5),
            ModeShape::LaneChangeRight => lane_change_path(pose, length, -self.lane_width, 101, 0.5),
            ModeShape::TurnLeft | ModeShape::TurnRight => {
                let r = if shape == ModeShape::TurnLeft { self.turn_radius } else { -self.turn_radius };
                arc_path(pose, r, std::f64::consts::FRAC_PI_2 * self.turn_radius, SYNTHETIC_STEP)
            }
        }
    }
}

pub fn synthesize_prediction(
    template: &SyntheticTemplate,
    state: &VehicleState,
) -> Result<MultimodalPrediction, SyntheticError> {
    template.validate()?;
    if !(state.velocity > 0.0) {
        return Err(SyntheticError::NotMoving(state.velocity));
    }
    let pose = Pose::new(state.position, state.heading);
    let length = state.velocity * template.horizon;
    let modes = template
        .modes
        .iter()
        .map(|m| Ok(PredictedTrajectory::new(template.mode_geometry(m.shape, pose, length)?, m.probability)))
        .collect::<Result<Vec<_>, SyntheticError>>()?;
    Ok(MultimodalPrediction::new(modes)?)
}
