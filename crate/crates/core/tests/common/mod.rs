#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use edrf::scenario::{load_scenario, EntityKind};

pub const FIXTURES: [&str; 5] = ["head_on", "cut_in", "decel_lead", "lane_change", "turn"];

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn golden_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> CliRun {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("edrf").chain(args.iter().copied());
    let code = edrf::cli::run(argv, &mut out, &mut err);
    CliRun {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Runs every applicable command on a fixture, writing all outputs to `out`.
/// `extra` is appended to each invocation (global flags such as `--threads`).
pub fn render_fixture(name: &str, out: &Path, extra: &[&str]) {
    let path = fixture(name);
    let spec = load_scenario(&path).unwrap();
    let scenario = path.to_str().unwrap();
    let out_dir = out.to_str().unwrap();
    let mut commands: Vec<Vec<&str>> = vec![vec!["monitor"]];
    let has_ego = spec.entities.iter().any(|e| e.kind == EntityKind::Ego);
    if has_ego {
        commands.push(vec!["ego"]);
    }
    if has_ego && spec.planner.is_some() {
        commands.push(vec!["plan"]);
    }
    for e in &spec.entities {
        commands.push(vec!["field", "--entity", e.id.as_str()]);
    }
    for mut cmd in commands {
        cmd.extend(["--scenario", scenario, "--out-dir", out_dir]);
        cmd.extend(extra);
        let r = cli(&cmd);
        assert_eq!(r.code, 0, "{name} {cmd:?}: {}", r.stderr);
    }
}

/// File name to contents for every file in `dir`.
pub fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        files.insert(
            entry.file_name().into_string().unwrap(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    files
}

/// Names of files that differ between two trees, including missing ones.
pub fn tree_diff(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut names: Vec<&String> = a.keys().chain(b.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.get(*n) != b.get(*n))
        .cloned()
        .collect()
}

use edrf::geometry::TrajectoryGeometry;
use edrf::math::Vec2;

/// Randomized smooth test path sampled at <= 0.5 m spacing, with the largest
/// lateral offset for which the round trip is expected to hold.
#[derive(Debug, Clone, Copy)]
pub enum PathShape {
    /// heading, length
    Straight(f64, f64),
    /// radius (signed for direction), sweep angle
    Arc(f64, f64),
    /// amplitude, wavelength, length
    Sine(f64, f64, f64),
}

pub fn sample_path(shape: PathShape, origin: Vec2, rotation: f64) -> (TrajectoryGeometry, f64) {
    let (pts, d_max): (Vec<Vec2>, f64) = match shape {
        PathShape::Straight(heading, length) => {
            let n = (length / 0.5).ceil() as usize;
            let dir = Vec2::new(heading.cos(), heading.sin());
            ((0..=n).map(|i| dir * (length * i as f64 / n as f64)).collect(), 20.0)
        }
        PathShape::Arc(radius, sweep) => {
            let r = radius.abs();
            let n = ((r * sweep) / 0.5).ceil() as usize;
            let pts = (0..=n)
                .map(|i| {
                    let phi = sweep * i as f64 / n as f64;
                    Vec2::new(r * phi.sin(), radius * (1.0 - phi.cos()))
                })
                .collect();
            (pts, 0.5 * r)
        }
        PathShape::Sine(amp, wavelength, length) => {
            let w = std::f64::consts::TAU / wavelength;
            let slope = amp * w;
            let dx = 0.5 / (1.0 + slope * slope).sqrt();
            let n = (length / dx).ceil() as usize;
            let pts = (0..=n)
                .map(|i| {
                    let x = length * i as f64 / n as f64;
                    Vec2::new(x, amp * (w * x).sin())
                })
                .collect();
            let kappa_max = amp * w * w;
            (pts, 0.5 / kappa_max)
        }
    };
    let pts = pts.into_iter().map(|p| p.rotated(rotation) + origin).collect();
    (TrajectoryGeometry::from_points(pts).unwrap(), d_max)
}

use edrf::ego::{EgoField, EgoParams};
use edrf::field::{FieldParams, MultimodalPrediction, PredictedField, PredictedTrajectory, VehicleState};
use edrf::interaction::EntityField;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random prediction with `modes` paths starting at the state pose.
pub fn random_prediction(rng: &mut ChaCha8Rng, state: &VehicleState, modes: usize) -> MultimodalPrediction {
    let raw: Vec<f64> = (0..modes).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let trajs = raw
        .iter()
        .map(|p| {
            let shape = match rng.gen_range(0..3) {
                0 => PathShape::Straight(0.0, rng.gen_range(10.0..90.0)),
                1 => {
                    let r: f64 = rng.gen_range(15.0..120.0);
                    PathShape::Arc(if rng.gen_bool(0.5) { r } else { -r }, rng.gen_range(0.2..1.2))
                }
                _ => PathShape::Sine(rng.gen_range(0.3..2.5), rng.gen_range(40.0..90.0), rng.gen_range(15.0..80.0)),
            };
            let (g, _) = sample_path(shape, state.position, state.heading);
            PredictedTrajectory::new(g, p / total)
        })
        .collect();
    MultimodalPrediction::new(trajs).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng) -> VehicleState {
    let mut s = VehicleState::passenger_car(
        Vec2::new(rng.gen_range(-30.0..30.0), rng.gen_range(-15.0..15.0)),
        rng.gen_range(-3.1..3.1),
        rng.gen_range(3.0..25.0),
    );
    s.mass = rng.gen_range(900.0..3000.0);
    s.type_factor = rng.gen_range(0.5..2.0);
    s
}

/// Random entity: a predicted vehicle or, with probability 1/3, an ego vehicle
/// with a random steering angle.
pub fn random_entity(rng: &mut ChaCha8Rng, id: &str) -> EntityField {
    let mut state = random_state(rng);
    if rng.gen_range(0..3) == 0 {
        state.steering_angle = rng.gen_range(-0.15..0.15);
        let ego = EgoField::new(&state, &EgoParams::default(), &FieldParams::default()).unwrap();
        EntityField::ego(id, state.position, ego)
    } else {
        let modes = rng.gen_range(1..=3);
        let pred = random_prediction(rng, &state, modes);
        EntityField::predicted(id, state.position, PredictedField::new(FieldParams::default(), pred, &state))
    }
}

/// Two random entities with interacting fields: the second one starts 10 to
/// 60 m ahead of the first, within 8 m of its heading line.
pub fn random_scene(rng: &mut ChaCha8Rng) -> (EntityField, EntityField) {
    let a = random_entity(rng, "a");
    let heading = match a.model() {
        edrf::interaction::FieldModel::Predicted(f) => f.prediction.modes()[0].geometry.start_heading(),
        edrf::interaction::FieldModel::Ego(f) => f.tube.as_ref().unwrap().geometry.start_heading(),
    };
    let ahead = Vec2::new(rng.gen_range(10.0..60.0), rng.gen_range(-8.0..8.0)).rotated(heading);
    let mut state = random_state(rng);
    state.position = a.position + ahead;
    let b = if rng.gen_range(0..3) == 0 {
        state.steering_angle = rng.gen_range(-0.15..0.15);
        let ego = EgoField::new(&state, &EgoParams::default(), &FieldParams::default()).unwrap();
        EntityField::ego("b", state.position, ego)
    } else {
        let modes = rng.gen_range(1..=3);
        let pred = random_prediction(rng, &state, modes);
        EntityField::predicted("b", state.position, PredictedField::new(FieldParams::default(), pred, &state))
    };
    (a, b)
}
