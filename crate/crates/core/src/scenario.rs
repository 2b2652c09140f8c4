//! Scenario files: JSON schema, validation, and construction of entity fields.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "entities": [
//!     { "id": "ego", "kind": "EGO",
//!       "state": { "position": [0, 0], "heading": 0, "velocity": 15 } },
//!     { "id": "lead", "kind": "PREDICTED",
//!       "state": { "position": [30, 0], "heading": 0, "velocity": 12 },
//!       "prediction": { "modes": [ { "probability": 1.0, "points": [[30, 0], [54, 0]] } ] } },
//!     { "id": "side", "kind": "PREDICTED",
//!       "state": { "position": [10, 3.5], "heading": 0, "velocity": 14 },
//!       "template": { "modes": [ { "shape": "STRAIGHT", "probability": 0.7 },
//!                                { "shape": "LANE_CHANGE_RIGHT", "probability": 0.3 } ],
//!                     "horizon": 6 } }
//!   ],
//!   "grid": { "mode": "AUTO", "resolution": 0.5 },
//!   "monitor": { "threshold": 1000 }
//! }
//! ```
//!
//! All quantities are SI. Validation errors carry the JSON path of the fault.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ego::{EgoField, EgoParams};
use crate::field::{FieldParams, MultimodalPrediction, PredictedField, PredictedTrajectory, VehicleState};
use crate::geometry::TrajectoryGeometry;
use crate::grid::GridSpec;
use crate::interaction::{EntityField, MonitorConfig};
use crate::math::{BBox, Vec2};
use crate::planner::PlannerConfig;
use crate::synthetic::{synthesize_prediction, SyntheticTemplate};

pub const SCHEMA_VERSION: u32 = 1;
/// Margin added around the union of support boxes for automatic grids, m.
pub const AUTO_GRID_MARGIN: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    pub fn invalid(path: impl Into<String>, message: impl ToString) -> Self {
        ScenarioError::Invalid { path: path.into(), message: message.to_string() }
    }

    /// JSON path of the fault, if any.
    pub fn json_path(&self) -> Option<&str> {
        match self {
            ScenarioError::Parse { path, .. } | ScenarioError::Invalid { path, .. } => Some(path),
            ScenarioError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityKind {
    Predicted,
    Ego,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub position: Vec2,
    pub heading: f64,
    pub velocity: f64,
    #[serde(default)]
    pub steering_angle: f64,
    #[serde(default = "default_wheelbase")]
    pub wheelbase: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_type_factor")]
    pub type_factor: f64,
}

fn default_wheelbase() -> f64 {
    2.8
}
fn default_mass() -> f64 {
    1500.0
}
fn default_type_factor() -> f64 {
    1.0
}

impl StateSpec {
    pub fn to_state(&self) -> VehicleState {
        VehicleState {
            position: self.position,
            heading: self.heading,
            velocity: self.velocity,
            steering_angle: self.steering_angle,
            wheelbase: self.wheelbase,
            mass: self.mass,
            type_factor: self.type_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub probability: f64,
    pub points: Vec<Vec2>,
}

/// Inline predictor output: the drop-in point for an external predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionSpec {
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub id: String,
    pub kind: EntityKind,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<SyntheticTemplate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum GridChoice {
    Auto {
        resolution: f64,
    },
    Explicit {
        origin: Vec2,
        resolution: f64,
        width: usize,
        height: usize,
    },
}

impl Default for GridChoice {
    fn default() -> Self {
        GridChoice::Auto { resolution: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub entities: Vec<EntitySpec>,
    #[serde(default)]
    pub grid: GridChoice,
    pub monitor: MonitorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<PlannerConfig>,
}

/// Model constants, overridable from a JSON file mirroring the field names.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub field: FieldParams,
    pub ego: EgoParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.field.validate().map_err(|e| ScenarioError::invalid("field", e))?;
        self.ego.validate().map_err(|e| ScenarioError::invalid("ego", e))
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    Ok(value)
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_owned(), source })
}

pub fn parse_params(text: &str) -> Result<ModelParams, ScenarioError> {
    let p: ModelParams = parse_json(text)?;
    p.validate()?;
    Ok(p)
}

pub fn load_params(path: &Path) -> Result<ModelParams, ScenarioError> {
    parse_params(&read(path)?)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = parse_json(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    parse_scenario(&read(path)?)
}

impl ScenarioSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.entities.is_empty() {
            return Err(ScenarioError::invalid("entities", "at least one entity is required"));
        }
        let mut ids = BTreeSet::new();
        for (i, e) in self.entities.iter().enumerate() {
            if e.id.is_empty() {
                return Err(ScenarioError::invalid(format!("entities[{i}].id"), "id must not be empty"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("entities[{i}].id"),
                    format!("duplicate entity id {:?}", e.id),
                ));
            }
            e.prediction_for(i)?;
        }
        match self.grid {
            GridChoice::Auto { resolution } => {
                if !(resolution.is_finite() && resolution > 0.0) {
                    return Err(ScenarioError::invalid("grid.resolution", "resolution must be > 0"));
                }
            }
            GridChoice::Explicit { origin, resolution, width, height } => {
                GridSpec { origin, resolution, width, height }
                    .validate(usize::MAX)
                    .map_err(|e| ScenarioError::invalid("grid", e))?;
            }
        }
        self.monitor.validate().map_err(|m| ScenarioError::invalid("monitor", m))?;
        if let Some(p) = &self.planner {
            p.validate().map_err(|e| ScenarioError::invalid("planner", e))?;
        }
        Ok(())
    }
}

impl EntitySpec {
    /// Validated state and, for predicted entities, the normalized prediction.
    fn prediction_for(&self, index: usize) -> Result<(VehicleState, Option<MultimodalPrediction>), ScenarioError> {
        let at = |suffix: &str| format!("entities[{index}]{suffix}");
        let state = self.state.to_state();
        state
            .validate()
            .map_err(|e| ScenarioError::invalid(at(".state"), e))?;
        match (self.kind, &self.prediction, &self.template) {
            (EntityKind::Ego, None, None) => Ok((state, None)),
            (EntityKind::Ego, ..) => Err(ScenarioError::invalid(
                at(""),
                format!("ego entity {:?} must not carry a prediction or template", self.id),
            )),
            (EntityKind::Predicted, Some(_), Some(_)) | (EntityKind::Predicted, None, None) => {
                Err(ScenarioError::invalid(
                    at(""),
                    format!("entity {:?} needs exactly one of prediction or template", self.id),
                ))
            }
            (EntityKind::Predicted, Some(pred), None) => {
                let modes = pred
                    .modes
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        let g = TrajectoryGeometry::from_points(m.points.clone()).map_err(|e| {
                            ScenarioError::invalid(at(&format!(".prediction.modes[{k}].points")), e)
                        })?;
                        Ok(PredictedTrajectory::new(g, m.probability))
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                let p = MultimodalPrediction::new(modes).map_err(|e| {
                    ScenarioError::invalid(at(".prediction.modes"), format!("entity {:?}: {e}", self.id))
                })?;
                Ok((state, Some(p)))
            }
            (EntityKind::Predicted, None, Some(t)) => {
                let p = synthesize_prediction(t, &state).map_err(|e| {
                    ScenarioError::invalid(at(".template"), format!("entity {:?}: {e}", self.id))
                })?;
                Ok((state, Some(p)))
            }
        }
    }
}

/// An entity with its field ready for evaluation.
#[derive(Debug, Clone)]
pub struct BuiltEntity {
    pub id: String,
    pub kind: EntityKind,
    pub state: VehicleState,
    pub prediction: Option<MultimodalPrediction>,
    pub field: EntityField,
}

/// A validated scenario with fields constructed under one parameter set.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub params: ModelParams,
    pub entities: Vec<BuiltEntity>,
}

impl Scenario {
    pub fn build(spec: ScenarioSpec, params: ModelParams) -> Result<Scenario, ScenarioError> {
        spec.validate()?;
        params.validate()?;
        let entities = spec
            .entities
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (state, prediction) = e.prediction_for(i)?;
                let field = match &prediction {
                    Some(p) => EntityField::predicted(
                        e.id.clone(),
                        state.position,
                        PredictedField::new(params.field, p.clone(), &state),
                    ),
                    None => {
                        let ego = EgoField::new(&state, &params.ego, &params.field)
                            .map_err(|err| ScenarioError::invalid(format!("entities[{i}].state"), err))?;
                        EntityField::ego(e.id.clone(), state.position, ego)
                    }
                };
                Ok(BuiltEntity { id: e.id.clone(), kind: e.kind, state, prediction, field })
            })
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        Ok(Scenario { spec, params, entities })
    }

    pub fn entity(&self, id: &str) -> Option<&BuiltEntity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// The single ego entity; an error when there are none or several.
    pub fn ego(&self) -> Result<&BuiltEntity, ScenarioError> {
        let mut egos = self.entities.iter().filter(|e| e.kind == EntityKind::Ego);
        match (egos.next(), egos.next()) {
            (Some(e), None) => Ok(e),
            (None, _) => Err(ScenarioError::invalid("entities", "exactly one ego entity is required, found none")),
            (Some(_), Some(_)) => {
                Err(ScenarioError::invalid("entities", "exactly one ego entity is required, found several"))
            }
        }
    }

    pub fn non_ego_fields(&self) -> Vec<EntityField> {
        self.entities
            .iter()
            .filter(|e| e.kind != EntityKind::Ego)
            .map(|e| e.field.clone())
            .collect()
    }

    pub fn fields(&self) -> Vec<EntityField> {
        self.entities.iter().map(|e| e.field.clone()).collect()
    }

    /// Output grid: the explicit grid, or the union of support boxes plus a
    /// margin. `resolution` overrides the configured cell size.
    pub fn output_grid(&self, resolution: Option<f64>) -> GridSpec {
        match self.spec.grid {
            GridChoice::Explicit { origin, resolution: r, width, height } => match resolution {
                None => GridSpec { origin, resolution: r, width, height },
                Some(new) => {
                    let bbox = GridSpec { origin, resolution: r, width, height }.bbox();
                    GridSpec::covering(bbox, new)
                }
            },
            GridChoice::Auto { resolution: r } => {
                GridSpec::covering(self.auto_bounds(), resolution.unwrap_or(r))
            }
        }
    }

    pub fn auto_bounds(&self) -> BBox {
        let hints = self.entities.iter().filter_map(|e| e.field.support_hint()).reduce(BBox::union);
        let base = hints.unwrap_or_else(|| {
            BBox::from_points(self.entities.iter().map(|e| e.state.position)).expect("non-empty entities")
        });
        base.dilate(AUTO_GRID_MARGIN)
    }
}
