//! Enhanced driver risk field (EDRF): probabilistic risk fields around
//! predicted trajectories, ego-vehicle fields, pairwise interaction risk,
//! and a small lattice planner built on top of them.

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ego;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod interaction;
pub mod math;
pub mod output;
pub mod paths;
pub mod planner;
pub mod scenario;
pub mod synthetic;

pub use ego::{EgoField, EgoParams};
pub use field::{FieldParams, MultimodalPrediction, PredictedField, PredictedTrajectory, VehicleState};
pub use geometry::{FrenetPoint, Polyline2D, TrajectoryGeometry};
pub use grid::{GridSpec, RiskGrid};
pub use interaction::{risk_level, EntityField, MonitorConfig, RiskReport};
pub use math::{BBox, Vec2};
pub use scenario::{load_scenario, parse_scenario, ModelParams, Scenario, ScenarioSpec};
