//! Sampled path primitives shared by the ego predictor, the candidate sampler
//! and the synthetic predictor.

use crate::geometry::{GeometryError, TrajectoryGeometry};
use crate::math::Vec2;

/// Position and heading of a path start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading }
    }

    fn to_world(self, local: Vec2) -> Vec2 {
        self.position + local.rotated(self.heading)
    }
}

/// Lateral quintic `10u^3 - 15u^4 + 6u^5` with zero slope and curvature at both ends.
#[inline]
pub fn smoothstep5(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Straight ray of `length` meters sampled every `step` meters (last step shortened to fit).
pub fn straight_path(pose: Pose, length: f64, step: f64) -> Result<TrajectoryGeometry, GeometryError> {
    let n = segments_for(length, step);
    let pts = (0..=n)
        .map(|i| pose.to_world(Vec2::new(length * i as f64 / n as f64, 0.0)))
        .collect();
    TrajectoryGeometry::from_points(pts)
}

/// Circular arc of signed `radius` (positive turns left) and `length` meters.
pub fn arc_path(
    pose: Pose,
    radius: f64,
    length: f64,
    step: f64,
) -> Result<TrajectoryGeometry, GeometryError> {
    let n = segments_for(length, step);
    let pts = (0..=n)
        .map(|i| {
            let s = length * i as f64 / n as f64;
            let phi = s / radius;
            let local = Vec2::new(radius * phi.sin(), radius * (1.0 - phi.cos()));
            pose.to_world(local)
        })
        .collect();
    TrajectoryGeometry::from_points(pts)
}

/// Lane change over `length` meters of longitudinal travel ending `offset`
/// meters to the left (negative: right), with the lateral quintic.
///
/// Stations are spaced by `smoothstep5` of a uniform parameter, which keeps the
/// first chord aligned with the start heading; enough points are taken that no
/// chord exceeds `max_spacing`.
pub fn lane_change_path(
    pose: Pose,
    length: f64,
    offset: f64,
    min_points: usize,
    max_spacing: f64,
) -> Result<TrajectoryGeometry, GeometryError> {
    // peak slope of smoothstep5 is 15/8; the lateral term adds at most 15/8 * |offset| / length
    let stretch = 1.875 * (1.0 + 1.875 * offset.abs() / length.max(1e-9));
    let by_spacing = (stretch * length / max_spacing).ceil() as usize + 1;
    let n = min_points.max(by_spacing).max(3);
    let pts = (0..n)
        .map(|i| {
            let u = smoothstep5(i as f64 / (n - 1) as f64);
            pose.to_world(Vec2::new(length * u, offset * smoothstep5(u)))
        })
        .collect();
    TrajectoryGeometry::from_points(pts)
}

fn segments_for(length: f64, step: f64) -> usize {
    ((length / step).ceil() as usize).max(1)
}
