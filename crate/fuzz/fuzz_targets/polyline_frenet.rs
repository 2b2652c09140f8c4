#![no_main]

use edrf::geometry::TrajectoryGeometry;
use edrf::math::Vec2;
use libfuzzer_sys::fuzz_target;

// Input: little-endian f64 pairs. The last pair is the query point, the rest
// are path vertices.
fuzz_target!(|data: &[u8]| {
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut points: Vec<Vec2> = values.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect();
    let Some(query) = points.pop() else { return };
    if points.len() > 256 || !points.iter().chain([&query]).all(|p| p.x.abs() < 1e6 && p.y.abs() < 1e6) {
        return;
    }
    let Ok(geom) = TrajectoryGeometry::from_points(points) else { return };
    let f = geom.to_frenet(query);
    assert!(f.s.is_finite() && f.d.is_finite());
    assert!(f.s >= 0.0 && f.s <= geom.total_length());
    let _ = geom.frenet_to_cartesian(f.s, f.d);
});
