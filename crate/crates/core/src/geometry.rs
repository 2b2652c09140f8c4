//! Polyline trajectories and the curvilinear (Frenet) frame built on them.
//!
//! A trajectory is an ordered polyline. [`TrajectoryGeometry`] precomputes arc
//! length, signed three-point (Menger) curvature and the miter normals at each
//! vertex, and maps Cartesian points to `(s, d)` and back.
//!
//! # Frame construction
//!
//! Every vertex carries a miter vector `m` with `m · n = 1` for the left normal
//! `n` of both adjacent segments (the end vertices use their segment normal).
//! Inside segment `k` the frame is the ruled surface
//!
//! ```text
//! p(t, d) = A + t (B - A) + d (m_A + t (m_B - m_A)),   t in [0, 1]
//! ```
//!
//! so `d` is exactly the signed perpendicular distance to the segment and the
//! offset curve at constant `d` is the parallel (mitered) polyline. The map is
//! closed-form invertible and continuous across vertices, which makes
//! [`TrajectoryGeometry::to_frenet`] and [`TrajectoryGeometry::frenet_to_cartesian`]
//! exact inverses wherever `|d|` is below the local radius of curvature. On
//! straight segments it coincides with orthogonal nearest-point projection.
//!
//! Points before the start or past the end are projected onto the extended end
//! segments; `s` is clamped and [`FrenetPoint::inside`] is cleared.

use thiserror::Error;

use crate::math::{BBox, Vec2};

/// Minimum admissible segment length in meters.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

const SEGMENTS_PER_BLOCK: usize = 32;
const PARAM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("vertices {0} and {next} are coincident", next = .0 + 1)]
    Coincident(usize),
    #[error("arc length {s} outside [0, {length}]")]
    ArcLengthOutOfRange { s: f64, length: f64 },
}

/// An ordered, validated sequence of at least two distinct points.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline2D {
    points: Vec<Vec2>,
}

impl Polyline2D {
    pub fn new(points: Vec<Vec2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| w[0].distance(w[1]) <= MIN_SEGMENT_LENGTH)
        {
            return Err(GeometryError::Coincident(i));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Reflection about the x-axis.
    pub fn mirrored(&self) -> Polyline2D {
        Polyline2D {
            points: self.points.iter().map(|p| Vec2::new(p.x, -p.y)).collect(),
        }
    }
}

/// Result of projecting a Cartesian point into a trajectory's frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetPoint {
    /// Arc length of the foot point, clamped to `[0, total_length]`.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub d: f64,
    /// Whether the unclamped arc length lay within `[0, total_length]`.
    pub inside: bool,
}

#[derive(Debug, Clone)]
struct SegmentBlock {
    first: usize,
    last: usize,
    bbox: BBox,
    max_miter: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    extended: bool,
    abs_d: f64,
    s: f64,
    d: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        if self.extended != other.extended {
            return !self.extended;
        }
        if self.abs_d != other.abs_d {
            return self.abs_d < other.abs_d;
        }
        self.s < other.s
    }
}

/// Precomputed arc-length, curvature and frame data for one polyline.
#[derive(Debug, Clone)]
pub struct TrajectoryGeometry {
    source: Polyline2D,
    cumulative: Vec<f64>,
    total_length: f64,
    curvature: Vec<f64>,
    mean_abs_curvature: f64,
    tangents: Vec<Vec2>,
    seg_lengths: Vec<f64>,
    miters: Vec<Vec2>,
    blocks: Vec<SegmentBlock>,
}

impl TrajectoryGeometry {
    pub fn new(path: Polyline2D) -> Self {
        let pts = &path.points;
        let n = pts.len();

        let mut seg_lengths = Vec::with_capacity(n - 1);
        let mut tangents = Vec::with_capacity(n - 1);
        for w in pts.windows(2) {
            let delta = w[1] - w[0];
            let len = delta.norm();
            seg_lengths.push(len);
            tangents.push(delta * (1.0 / len));
        }

        let mut cumulative = Vec::with_capacity(n);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for &len in &seg_lengths {
            acc += len;
            cumulative.push(acc);
        }
        let total_length = acc;

        let mut curvature = vec![0.0; n];
        for i in 1..n - 1 {
            curvature[i] = menger_curvature(pts[i - 1], pts[i], pts[i + 1]);
        }
        if n >= 3 {
            curvature[0] = curvature[1];
            curvature[n - 1] = curvature[n - 2];
        }
        let mean_abs_curvature = curvature.iter().map(|k| k.abs()).sum::<f64>() / n as f64;

        let mut miters = Vec::with_capacity(n);
        miters.push(tangents[0].perp());
        for i in 1..n - 1 {
            let n0 = tangents[i - 1].perp();
            let n1 = tangents[i].perp();
            let denom = 1.0 + n0.dot(n1);
            // Near-reversals have no usable miter; the fallback projection handles them.
            let m = if denom > 1e-6 { (n0 + n1) * (1.0 / denom) } else { n0 };
            miters.push(m);
        }
        miters.push(tangents[n - 2].perp());

        let blocks = (0..n - 1)
            .step_by(SEGMENTS_PER_BLOCK)
            .map(|first| {
                let last = (first + SEGMENTS_PER_BLOCK).min(n - 1) - 1;
                let bbox = BBox::from_points(pts[first..=last + 1].iter().copied())
                    .expect("non-empty block");
                let max_miter = miters[first..=last + 1]
                    .iter()
                    .map(|m| m.norm())
                    .fold(1.0, f64::max);
                SegmentBlock { first, last, bbox, max_miter }
            })
            .collect();

        Self {
            source: path,
            cumulative,
            total_length,
            curvature,
            mean_abs_curvature,
            tangents,
            seg_lengths,
            miters,
            blocks,
        }
    }

    pub fn from_points(points: Vec<Vec2>) -> Result<Self, GeometryError> {
        Polyline2D::new(points).map(Self::new)
    }

    pub fn polyline(&self) -> &Polyline2D {
        &self.source
    }

    pub fn points(&self) -> &[Vec2] {
        &self.source.points
    }

    pub fn cumulative_arc_length(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Signed curvature per vertex, positive for left turns.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn mean_abs_curvature(&self) -> f64 {
        self.mean_abs_curvature
    }

    pub fn segment_tangents(&self) -> &[Vec2] {
        &self.tangents
    }

    /// Largest miter-vector length; bounds Euclidean distance per unit of `|d|`.
    pub fn max_miter_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_miter).fold(1.0, f64::max)
    }

    pub fn start(&self) -> Vec2 {
        self.source.points[0]
    }

    pub fn end(&self) -> Vec2 {
        *self.source.points.last().expect("non-empty")
    }

    /// Heading at the first vertex, taken from the circle through the first three
    /// vertices (or the first segment for two-point paths). Exact for sampled arcs.
    pub fn start_heading(&self) -> f64 {
        let chord = self.tangents[0].angle();
        if self.source.points.len() < 3 {
            return chord;
        }
        let half = (0.5 * self.seg_lengths[0] * self.curvature[1]).clamp(-1.0, 1.0);
        chord - half.asin()
    }

    /// Bounding box of the vertices.
    pub fn bbox(&self) -> BBox {
        BBox::from_points(self.source.points.iter().copied()).expect("non-empty")
    }

    /// Projects `point` into the trajectory frame.
    pub fn to_frenet(&self, point: Vec2) -> FrenetPoint {
        let mut order: Vec<(f64, usize)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| (b.bbox.distance_to(point), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut best: Option<Candidate> = None;
        for &(dist, bi) in &order {
            let block = &self.blocks[bi];
            if let Some(b) = best {
                if !b.extended && dist > b.abs_d * block.max_miter * (1.0 + 1e-9) + 1e-12 {
                    continue;
                }
            }
            for k in block.first..=block.last {
                if let Some(c) = self.project_segment(k, point) {
                    if best.is_none_or(|b| c.better_than(&b)) {
                        best = Some(c);
                    }
                }
            }
        }

        let c = best.unwrap_or_else(|| self.nearest_point_projection(point));
        let inside = c.s >= 0.0 && c.s <= self.total_length;
        FrenetPoint {
            s: c.s.clamp(0.0, self.total_length),
            d: c.d,
            inside,
        }
    }

    fn project_segment(&self, k: usize, p: Vec2) -> Option<Candidate> {
        let a = self.source.points[k];
        let u = self.tangents[k];
        let n = u.perp();
        let len = self.seg_lengths[k];
        let ma = self.miters[k];
        let mb = self.miters[k + 1];
        let last = self.seg_lengths.len() - 1;

        let r = p - a;
        let d = r.dot(n);
        let along = r.dot(u);
        let denom = len + d * (mb - ma).dot(u);
        if denom <= 0.0 {
            return None;
        }
        let t = (along - d * ma.dot(u)) / denom;

        if t < -PARAM_TOLERANCE {
            if k != 0 {
                return None;
            }
            return Some(Candidate { extended: true, abs_d: d.abs(), s: along, d });
        }
        if t > 1.0 + PARAM_TOLERANCE {
            if k != last {
                return None;
            }
            let along_end = (p - self.source.points[k + 1]).dot(u);
            return Some(Candidate {
                extended: true,
                abs_d: d.abs(),
                s: self.total_length + along_end,
                d,
            });
        }
        let t = t.clamp(0.0, 1.0);
        Some(Candidate {
            extended: false,
            abs_d: d.abs(),
            s: self.cumulative[k] + t * len,
            d,
        })
    }

    /// Orthogonal projection onto the nearest segment; used where the mitered
    /// frame has no valid cell (beyond a center of curvature, sharp reversals).
    fn nearest_point_projection(&self, p: Vec2) -> Candidate {
        let mut best: Option<(f64, Candidate)> = None;
        for k in 0..self.seg_lengths.len() {
            let a = self.source.points[k];
            let u = self.tangents[k];
            let len = self.seg_lengths[k];
            let along = (p - a).dot(u).clamp(0.0, len);
            let foot = a + u * along;
            let dist = p.distance(foot);
            let side = u.cross(p - foot);
            let d = if side < 0.0 { -dist } else { dist };
            let c = Candidate { extended: false, abs_d: dist, s: self.cumulative[k] + along, d };
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, c));
            }
        }
        best.expect("at least one segment").1
    }

    fn segment_at(&self, s: f64) -> usize {
        let idx = self.cumulative.partition_point(|&c| c <= s);
        idx.saturating_sub(1).min(self.seg_lengths.len() - 1)
    }

    /// Inverse of [`Self::to_frenet`]: the point at arc length `s` offset by `d`.
    pub fn frenet_to_cartesian(&self, s: f64, d: f64) -> Result<Vec2, GeometryError> {
        if !(0.0..=self.total_length).contains(&s) {
            return Err(GeometryError::ArcLengthOutOfRange { s, length: self.total_length });
        }
        let k = self.segment_at(s);
        let a = self.source.points[k];
        let b = self.source.points[k + 1];
        let t = ((s - self.cumulative[k]) / self.seg_lengths[k]).clamp(0.0, 1.0);
        let ma = self.miters[k];
        let mb = self.miters[k + 1];
        Ok(a + (b - a) * t + (ma + (mb - ma) * t) * d)
    }

    /// Point on the polyline at arc length `s` (clamped).
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.total_length);
        self.frenet_to_cartesian(s, 0.0).expect("clamped arc length")
    }

    /// Signed curvature interpolated linearly between vertices at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length);
        let k = self.segment_at(s);
        let t = ((s - self.cumulative[k]) / self.seg_lengths[k]).clamp(0.0, 1.0);
        self.curvature[k] + (self.curvature[k + 1] - self.curvature[k]) * t
    }
}

/// Signed curvature of the circle through three points (0 when collinear).
pub fn menger_curvature(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ac = c - a;
    let denom = ab.norm() * bc.norm() * ac.norm();
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * ab.cross(bc) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(radius: f64, sweep: f64, n: usize) -> TrajectoryGeometry {
        let pts = (0..n)
            .map(|i| {
                let a = sweep * i as f64 / (n - 1) as f64;
                Vec2::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        TrajectoryGeometry::from_points(pts).unwrap()
    }

    #[test]
    fn collinear_line_has_zero_curvature() {
        let g = TrajectoryGeometry::from_points(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 4.0),
            Vec2::new(6.0, 8.0),
        ])
        .unwrap();
        assert_eq!(g.total_length(), 10.0);
        assert!(g.curvature().iter().all(|&k| k == 0.0));
        assert_eq!(g.mean_abs_curvature(), 0.0);
        assert_eq!(g.cumulative_arc_length(), &[0.0, 5.0, 10.0]);
    }

    #[test]
    fn half_circle_curvature_matches_radius() {
        let g = circle(10.0, PI, 32);
        for &k in &g.curvature()[1..31] {
            assert!((k - 0.1).abs() <= 1e-3, "{k}");
        }
        // endpoints copy their interior neighbour
        assert_eq!(g.curvature()[0], g.curvature()[1]);
        assert_eq!(g.curvature()[31], g.curvature()[30]);
    }

    #[test]
    fn two_point_path() {
        let g = TrajectoryGeometry::from_points(vec![Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)])
            .unwrap();
        assert_eq!(g.total_length(), 5.0);
        assert_eq!(g.mean_abs_curvature(), 0.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(
            Polyline2D::new(vec![Vec2::new(1.0, 1.0)]),
            Err(GeometryError::TooFewPoints(1))
        );
        assert_eq!(
            Polyline2D::new(vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)]),
            Err(GeometryError::Coincident(0))
        );
        assert_eq!(
            Polyline2D::new(vec![Vec2::new(0.0, 0.0), Vec2::new(f64::NAN, 0.0)]),
            Err(GeometryError::NonFinite(1))
        );
    }

    #[test]
    fn frenet_on_axis() {
        let g = TrajectoryGeometry::from_points(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)])
            .unwrap();
        assert_eq!(
            g.to_frenet(Vec2::new(2.0, 1.0)),
            FrenetPoint { s: 2.0, d: 1.0, inside: true }
        );
        assert_eq!(
            g.to_frenet(Vec2::new(12.0, 0.0)),
            FrenetPoint { s: 10.0, d: 0.0, inside: false }
        );
        let behind = g.to_frenet(Vec2::new(-3.0, -2.0));
        assert_eq!((behind.s, behind.d, behind.inside), (0.0, -2.0, false));
        assert_eq!(g.frenet_to_cartesian(3.0, 2.0).unwrap(), Vec2::new(3.0, 2.0));
        assert!(matches!(
            g.frenet_to_cartesian(10.5, 0.0),
            Err(GeometryError::ArcLengthOutOfRange { .. })
        ));
    }

    #[test]
    fn frenet_half_circle_outer_point() {
        // CCW travel: the radial outward side is the right-hand side.
        let g = circle(10.0, PI, 32);
        let f = g.to_frenet(Vec2::new(0.0, 11.0));
        // Oracle: analytic circle gives s = 5*pi, d = -1; the 31-chord polygon
        // shortens arc length by the chord factor and moves the midpoint inward.
        let half_chord = 10.0 * (PI / 62.0).sin();
        let s_poly = 15.5 * 2.0 * half_chord;
        let d_poly = -(11.0 - 10.0 * (PI / 62.0).cos());
        assert!((f.s - s_poly).abs() < 1e-9, "{f:?}");
        assert!((f.d - d_poly).abs() < 1e-9, "{f:?}");
        assert!((f.s - 5.0 * PI).abs() < 0.02);
        assert!((f.d + 1.0).abs() < 0.02);
        assert!(f.inside);
    }

    #[test]
    fn round_trip_circle_half_length() {
        let g = circle(10.0, 2.0 * PI, 129);
        let p = g.frenet_to_cartesian(0.5 * g.total_length(), 0.0).unwrap();
        assert!(p.distance(Vec2::new(-10.0, 0.0)) < 1e-6, "{p:?}");
        // dense sampling from the top of the circle: a quarter turn reaches (-10, 0)
        let pts = (0..20001)
            .map(|i| Vec2::new(0.0, 10.0).rotated(2.0 * PI * i as f64 / 20000.0))
            .collect();
        let fine = TrajectoryGeometry::from_points(pts).unwrap();
        let q = fine.frenet_to_cartesian(5.0 * PI, 0.0).unwrap();
        assert!(q.distance(Vec2::new(-10.0, 0.0)) < 1e-6, "{q:?}");
    }

    #[test]
    fn inner_corner_round_trip_is_exact() {
        let g = circle(10.0, PI, 64);
        for &(s, d) in &[(3.0, 4.9), (7.77, -4.9), (g.total_length(), 2.0), (0.0, -3.0)] {
            let p = g.frenet_to_cartesian(s, d).unwrap();
            let f = g.to_frenet(p);
            assert!((f.s - s).abs() < 1e-9 && (f.d - d).abs() < 1e-9, "{s} {d} {f:?}");
        }
    }

    #[test]
    fn start_heading_of_sampled_arc() {
        let g = circle(12.0, PI / 2.0, 40);
        assert!((g.start_heading() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_curvature_flips_sign() {
        let g = circle(7.0, 2.0, 25);
        let m = TrajectoryGeometry::new(g.polyline().mirrored());
        for (a, b) in g.curvature().iter().zip(m.curvature()) {
            assert!((a + b).abs() < 1e-12);
        }
        assert!((g.mean_abs_curvature() - m.mean_abs_curvature()).abs() < 1e-12);
    }

    #[test]
    fn center_of_full_circle_uses_fallback() {
        let g = circle(5.0, 1.5 * PI, 50);
        let f = g.to_frenet(Vec2::new(0.0, 0.0));
        assert!(f.d.is_finite() && f.s.is_finite());
        assert!((f.d.abs() - 5.0).abs() < 0.01);
    }
}
