//! Synthetic dynamic scenes: a moving camera, static landmarks and rigid
//! objects under body-frame motion, observed as noisy 3D point tracks.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Motion, Point3, Pose, Twist};

/// Object ids are assigned from 1 in spec order; 0 marks static structure.
pub type ObjectId = u32;

const STATIC_STREAM: u64 = 0;
const ODOMETRY_STREAM: u64 = 1 << 40;

fn default_max_features() -> usize {
    100
}

fn default_lifetime() -> u32 {
    u32::MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub num_frames: u32,
    #[serde(default)]
    pub rng_seed: u64,
    /// Isotropic standard deviation of every measured point coordinate, meters.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Standard deviations `[rotation rad, translation m]` of the odometry
    /// measurement; `None` disables odometry.
    #[serde(default)]
    pub odometry_noise: Option<[f64; 2]>,
    #[serde(default = "default_max_features")]
    pub max_features_per_object: usize,
    pub camera: CameraPath,
    #[serde(default)]
    pub static_points: StaticPoints,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CameraPath {
    /// `X_k = X_{k-1}·exp(twist)`.
    ConstantTwist { initial: Pose, twist: [f64; 6] },
    /// Piecewise-constant twist between waypoints spread evenly over the frames.
    Waypoints { poses: Vec<Pose> },
}

/// Static landmarks visible per frame. Each track lives for `track_lifetime`
/// frames and is replaced by a fresh point spawned in the camera-frame box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticPoints {
    pub count: usize,
    pub min: [f64; 3],
    pub max: [f64; 3],
    #[serde(default = "default_lifetime")]
    pub track_lifetime: u32,
}

impl Default for StaticPoints {
    fn default() -> Self {
        StaticPoints { count: 0, min: [-10.0, -5.0, 4.0], max: [10.0, 5.0, 25.0], track_lifetime: u32::MAX }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodyTwist {
    Constant([f64; 6]),
    /// One twist per frame transition; entry `k-1` moves frame `k-1` to `k`.
    PerFrame(Vec<[f64; 6]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub initial_pose: Pose,
    pub body_twist: BodyTwist,
    /// Explicit body-frame points. When empty, `num_points` points are drawn
    /// uniformly from a box of size `extent` centred on the body origin.
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub num_points: usize,
    #[serde(default = "default_extent")]
    pub extent: [f64; 3],
    #[serde(default = "default_lifetime")]
    pub track_lifetime: u32,
    /// Inclusive `[first_seen, last_seen]`; the whole sequence when absent.
    #[serde(default)]
    pub visibility: Option<[u32; 2]>,
}

fn default_extent() -> [f64; 3] {
    [2.0, 1.5, 4.0]
}

impl ObjectSpec {
    fn cloud_size(&self) -> usize {
        if self.points.is_empty() {
            self.num_points
        } else {
            self.points.len()
        }
    }

    fn twist_at(&self, transition: u32) -> Twist {
        let t = match &self.body_twist {
            BodyTwist::Constant(t) => *t,
            BodyTwist::PerFrame(list) => list[transition as usize],
        };
        Twist::from_column_slice(&t)
    }

    fn window(&self, num_frames: u32) -> (u32, u32) {
        self.visibility.map_or((0, num_frames - 1), |[a, b]| (a, b))
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_frames < 2 {
            return bad("num_frames must be at least 2".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative".into());
        }
        if let Some([r, t]) = self.odometry_noise {
            if !(r >= 0.0 && t >= 0.0 && r.is_finite() && t.is_finite()) {
                return bad("odometry_noise entries must be finite and non-negative".into());
            }
        }
        match &self.camera {
            CameraPath::Waypoints { poses } if poses.len() < 2 => return bad("camera path needs at least 2 waypoints".into()),
            CameraPath::Waypoints { poses } if poses.len() > self.num_frames as usize => {
                return bad("more camera waypoints than frames".into())
            }
            _ => {}
        }
        let s = &self.static_points;
        if (0..3).any(|i| !(s.min[i] <= s.max[i])) {
            return bad("static point bounds must satisfy min <= max".into());
        }
        if s.count > 0 && s.track_lifetime < 2 {
            return bad("static track_lifetime must be at least 2".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            let id = i + 1;
            if o.cloud_size() < 3 {
                return bad(format!("object {id} needs at least 3 points"));
            }
            if o.track_lifetime < 2 {
                return bad(format!("object {id} track_lifetime must be at least 2"));
            }
            if let BodyTwist::PerFrame(list) = &o.body_twist {
                if list.len() + 1 < self.num_frames as usize {
                    return bad(format!("object {id} needs {} per-frame twists", self.num_frames - 1));
                }
            }
            let (a, b) = o.window(self.num_frames);
            if a > b || b >= self.num_frames {
                return bad(format!("object {id} is never visible: window [{a}, {b}] outside [0, {})", self.num_frames));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SceneConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Identity-pose camera that never moves, with nothing in the scene.
    pub fn stationary(num_frames: u32) -> Self {
        SceneConfig {
            num_frames,
            rng_seed: 0,
            noise_sigma: 0.0,
            odometry_noise: None,
            max_features_per_object: default_max_features(),
            camera: CameraPath::ConstantTwist { initial: Pose::identity(), twist: [0.0; 6] },
            static_points: StaticPoints::default(),
            objects: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectTruth {
    pub first_seen: u32,
    pub last_seen: u32,
    /// Pose at every frame of the sequence (the object moves while unseen).
    pub poses: Vec<Pose>,
    /// `L_k·L_{k-1}⁻¹` for every visible frame after the first.
    pub frame_motions: BTreeMap<u32, Motion>,
    /// `L_k·L_e⁻¹` with `e = first_seen`, for every visible frame.
    pub cumulative_motions: BTreeMap<u32, Motion>,
    /// Body-frame position of every track ever spawned.
    pub body_points: BTreeMap<u64, Point3>,
}

impl ObjectTruth {
    pub fn world_point(&self, track: u64, frame: u32) -> Option<Point3> {
        Some(self.poses.get(frame as usize)?.transform_point(self.body_points.get(&track)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub camera_poses: Vec<Pose>,
    pub objects: BTreeMap<ObjectId, ObjectTruth>,
    pub static_points_world: BTreeMap<u64, Point3>,
}

impl GroundTruth {
    pub fn object(&self, j: ObjectId) -> Result<&ObjectTruth> {
        self.objects.get(&j).ok_or(Error::UnknownObject(j))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameMeasurements {
    pub frame: u32,
    /// Noisy `X_{k-1}⁻¹·X_k`; absent at the first frame or when disabled.
    pub odometry: Option<Motion>,
    pub static_obs: Vec<(u64, Point3)>,
    pub dynamic_obs: BTreeMap<ObjectId, Vec<(u64, Point3)>>,
}

#[derive(Clone, Copy, Debug)]
struct Track {
    id: u64,
    age: u32,
    slot: usize,
}

fn initial_age(slot: usize, slots: usize, lifetime: u32, num_frames: u32) -> u32 {
    if lifetime >= num_frames {
        0
    } else {
        (slot as u64 * lifetime as u64 / slots as u64) as u32
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, min: &[f64; 3], max: &[f64; 3]) -> Point3 {
    Vector3::from_fn(|i, _| if max[i] > min[i] { rng.random_range(min[i]..max[i]) } else { min[i] })
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| sigma * rng.sample::<f64, _>(StandardNormal))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn camera_trajectory(cfg: &SceneConfig) -> Vec<Pose> {
    let n = cfg.num_frames as usize;
    match &cfg.camera {
        CameraPath::ConstantTwist { initial, twist } => {
            let step = Motion::exp(&Twist::from_column_slice(twist));
            let mut out = vec![*initial];
            for k in 1..n {
                out.push(out[k - 1].compose(&step.reinterpret()));
            }
            out
        }
        CameraPath::Waypoints { poses } => {
            let segments = poses.len() - 1;
            let mut out = Vec::with_capacity(n);
            out.push(poses[0]);
            // frame indices at which each waypoint is reached
            let reach: Vec<usize> = (0..=segments).map(|i| i * (n - 1) / segments).collect();
            for s in 0..segments {
                let len = reach[s + 1] - reach[s];
                if len == 0 {
                    continue;
                }
                let xi = poses[s].between(&poses[s + 1]).log() / len as f64;
                let step = Pose::exp(&xi);
                for i in 1..=len {
                    let k = reach[s] + i;
                    let p = if i == len { poses[s + 1] } else { out[k - 1].compose(&step) };
                    out.push(p);
                }
            }
            out
        }
    }
}

/// Simulates the scene. Every object draws from its own random stream, so
/// an object's data does not depend on which other objects are present.
pub fn generate_scene(cfg: &SceneConfig) -> Result<(GroundTruth, Vec<FrameMeasurements>)> {
    cfg.validate()?;
    let n = cfg.num_frames;
    let cameras = camera_trajectory(cfg);
    let mut frames: Vec<FrameMeasurements> =
        (0..n).map(|k| FrameMeasurements { frame: k, ..Default::default() }).collect();

    if let Some([sr, st]) = cfg.odometry_noise {
        let mut rng = stream(cfg.rng_seed, ODOMETRY_STREAM);
        for k in 1..n as usize {
            let rot = gaussian3(&mut rng, sr);
            let trans = gaussian3(&mut rng, st);
            let noise = Twist::new(rot.x, rot.y, rot.z, trans.x, trans.y, trans.z);
            let odom = cameras[k - 1].between(&cameras[k]).reinterpret::<crate::geometry::MotionTag>();
            frames[k].odometry = Some(odom.compose(&Motion::exp(&noise)));
        }
    }

    // static landmarks
    let mut static_world = BTreeMap::new();
    {
        let sp = &cfg.static_points;
        let mut rng = stream(cfg.rng_seed, STATIC_STREAM);
        let mut next_id = 0u64;
        let mut tracks: Vec<Track> = Vec::with_capacity(sp.count);
        for slot in 0..sp.count {
            tracks.push(Track { id: next_id, age: initial_age(slot, sp.count, sp.track_lifetime, n), slot });
            static_world.insert(next_id, cameras[0].transform_point(&uniform_in(&mut rng, &sp.min, &sp.max)));
            next_id += 1;
        }
        for k in 0..n as usize {
            for t in tracks.iter_mut() {
                if t.age >= sp.track_lifetime {
                    *t = Track { id: next_id, age: 0, slot: t.slot };
                    static_world.insert(next_id, cameras[k].transform_point(&uniform_in(&mut rng, &sp.min, &sp.max)));
                    next_id += 1;
                }
                let m = static_world[&t.id];
                let z = cameras[k].inverse().transform_point(&m) + gaussian3(&mut rng, cfg.noise_sigma);
                frames[k].static_obs.push((t.id, z));
                t.age += 1;
            }
        }
    }

    let mut objects = BTreeMap::new();
    for (i, spec) in cfg.objects.iter().enumerate() {
        let j = i as ObjectId + 1;
        let mut rng = stream(cfg.rng_seed, j as u64);
        let (first, last) = spec.window(n);
        let mut poses = vec![spec.initial_pose];
        for k in 1..n {
            let step = Pose::exp(&spec.twist_at(k - 1));
            poses.push(poses[k as usize - 1].compose(&step));
        }
        let base_id = (j as u64) << 32;
        let generated = spec.points.is_empty();
        let half: [f64; 3] = spec.extent.map(|e| e * 0.5);
        let neg_half: [f64; 3] = half.map(|h| -h);
        let draw_point = |rng: &mut ChaCha8Rng, slot: usize| -> Point3 {
            if generated {
                uniform_in(rng, &neg_half, &half)
            } else {
                Vector3::from(spec.points[slot])
            }
        };
        let slots = spec.cloud_size().min(cfg.max_features_per_object);
        let mut body_points = BTreeMap::new();
        let mut next = 0u64;
        let mut tracks = Vec::with_capacity(slots);
        for slot in 0..slots {
            let id = base_id | next;
            next += 1;
            body_points.insert(id, draw_point(&mut rng, slot));
            tracks.push(Track { id, age: initial_age(slot, slots, spec.track_lifetime, last - first + 1), slot });
        }
        for k in first..=last {
            let pose = poses[k as usize];
            let to_camera = cameras[k as usize].inverse();
            let mut obs = Vec::with_capacity(slots);
            for t in tracks.iter_mut() {
                if t.age >= spec.track_lifetime {
                    let id = base_id | next;
                    next += 1;
                    body_points.insert(id, draw_point(&mut rng, t.slot));
                    *t = Track { id, age: 0, slot: t.slot };
                }
                let world = pose.transform_point(&body_points[&t.id]);
                obs.push((t.id, to_camera.transform_point(&world) + gaussian3(&mut rng, cfg.noise_sigma)));
                t.age += 1;
            }
            frames[k as usize].dynamic_obs.insert(j, obs);
        }
        let anchor_inv = poses[first as usize].inverse();
        let frame_motions = (first + 1..=last)
            .map(|k| (k, poses[k as usize].compose(&poses[k as usize - 1].inverse()).reinterpret()))
            .collect();
        let cumulative_motions =
            (first..=last).map(|k| (k, poses[k as usize].compose(&anchor_inv).reinterpret())).collect();
        objects.insert(
            j,
            ObjectTruth { first_seen: first, last_seen: last, poses, frame_motions, cumulative_motions, body_points },
        );
    }

    Ok((GroundTruth { camera_poses: cameras, objects, static_points_world: static_world }, frames))
}

/// `L_k·L_{k-1}⁻¹` for object `j`.
pub fn ground_truth_frame_motion(gt: &GroundTruth, j: ObjectId, k: u32) -> Result<Motion> {
    let obj = gt.object(j)?;
    if k <= obj.first_seen || k as usize >= obj.poses.len() {
        return Err(Error::UnknownFrame(k));
    }
    let (a, b) = (obj.poses[k as usize - 1], obj.poses[k as usize]);
    Ok(b.compose(&a.inverse()).reinterpret())
}

#[derive(Serialize)]
struct MeasurementRow {
    frame: u32,
    class: &'static str,
    object_id: ObjectId,
    track_id: u64,
    zx: f64,
    zy: f64,
    zz: f64,
}

/// Writes one CSV row per observation:
/// `frame,class,object_id,track_id,zx,zy,zz` with class `static` or `dynamic`.
pub fn write_measurements<W: Write>(frames: &[FrameMeasurements], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in frames {
        for (track_id, z) in &f.static_obs {
            w.serialize(MeasurementRow { frame: f.frame, class: "static", object_id: 0, track_id: *track_id, zx: z.x, zy: z.y, zz: z.z })
                .map_err(csv_err)?;
        }
        for (j, obs) in &f.dynamic_obs {
            for (track_id, z) in obs {
                w.serialize(MeasurementRow { frame: f.frame, class: "dynamic", object_id: *j, track_id: *track_id, zx: z.x, zy: z.y, zz: z.z })
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::twist;
    use approx::assert_abs_diff_eq;

    fn one_object(twist: [f64; 6], points: Vec<[f64; 3]>) -> SceneConfig {
        let mut cfg = SceneConfig::stationary(6);
        cfg.objects.push(ObjectSpec {
            initial_pose: Pose::identity(),
            body_twist: BodyTwist::Constant(twist),
            points,
            num_points: 0,
            extent: default_extent(),
            track_lifetime: u32::MAX,
            visibility: None,
        });
        cfg
    }

    #[test]
    fn stationary_camera_sees_fixed_static_point() {
        let mut cfg = SceneConfig::stationary(4);
        cfg.static_points = StaticPoints { count: 1, min: [0.0, 0.0, 5.0], max: [0.0, 0.0, 5.0], track_lifetime: u32::MAX };
        let (_, frames) = generate_scene(&cfg).unwrap();
        for f in &frames {
            assert_eq!(f.static_obs, vec![(0, Vector3::new(0.0, 0.0, 5.0))]);
        }
    }

    #[test]
    fn translating_object_follows_forward_kinematics() {
        let mut cfg = one_object([0.0, 0.0, 0.0, 1.0, 0.0, 0.0], vec![[0.0; 3], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        cfg.camera = CameraPath::ConstantTwist { initial: Pose::identity(), twist: [0.0, 0.0, 0.1, 0.2, 0.0, 0.0] };
        let (gt, frames) = generate_scene(&cfg).unwrap();
        for (k, f) in frames.iter().enumerate() {
            let x = gt.camera_poses[k];
            let want = x.inverse().transform_point(&Vector3::new(k as f64, 0.0, 0.0));
            assert_abs_diff_eq!(f.dynamic_obs[&1][0].1, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn same_seed_gives_identical_csv() {
        let mut cfg = one_object([0.0, 0.0, 0.05, 0.5, 0.0, 0.0], Vec::new());
        cfg.objects[0].num_points = 12;
        cfg.objects[0].track_lifetime = 3;
        cfg.noise_sigma = 0.01;
        cfg.static_points.count = 5;
        let render = |cfg: &SceneConfig| {
            let (_, frames) = generate_scene(cfg).unwrap();
            let mut buf = Vec::new();
            write_measurements(&frames, &mut buf).unwrap();
            buf
        };
        let a = render(&cfg);
        assert_eq!(a, render(&cfg));
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("frame,class,object_id,track_id,zx,zy,zz\n"));
        cfg.rng_seed = 1;
        assert_ne!(text.as_bytes(), render(&cfg).as_slice());
    }

    #[test]
    fn object_data_is_independent_of_other_objects() {
        let mut cfg = one_object([0.0, 0.0, 0.05, 0.5, 0.0, 0.0], Vec::new());
        cfg.objects[0].num_points = 8;
        cfg.noise_sigma = 0.02;
        let (_, alone) = generate_scene(&cfg).unwrap();
        cfg.objects.push(cfg.objects[0].clone());
        let (_, both) = generate_scene(&cfg).unwrap();
        for (a, b) in alone.iter().zip(&both) {
            assert_eq!(a.dynamic_obs[&1], b.dynamic_obs[&1]);
        }
    }

    #[test]
    fn truth_motions_satisfy_composition() {
        let mut cfg = one_object([0.02, -0.01, 0.1, 0.7, 0.1, 0.0], Vec::new());
        cfg.objects[0].num_points = 5;
        cfg.objects[0].visibility = Some([1, 5]);
        let (gt, _) = generate_scene(&cfg).unwrap();
        let obj = gt.object(1).unwrap();
        for k in 2..=5u32 {
            let h = ground_truth_frame_motion(&gt, 1, k).unwrap();
            let again = h.compose(&obj.poses[k as usize - 1].reinterpret()).reinterpret::<crate::geometry::PoseTag>();
            assert!(again.max_abs_diff(&obj.poses[k as usize]) < 1e-12);
            assert!(h.max_abs_diff(&obj.frame_motions[&k]) < 1e-15);
            let cum = obj.cumulative_motions[&k].compose(&obj.poses[1].reinterpret());
            assert!(cum.reinterpret::<crate::geometry::PoseTag>().max_abs_diff(&obj.poses[k as usize]) < 1e-12);
        }
        assert!(ground_truth_frame_motion(&gt, 1, 1).is_err());
        assert!(ground_truth_frame_motion(&gt, 2, 3).is_err());
    }

    #[test]
    fn stationary_object_has_identity_frame_motion() {
        let cfg = one_object([0.0; 6], vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let (gt, _) = generate_scene(&cfg).unwrap();
        assert_eq!(ground_truth_frame_motion(&gt, 1, 3).unwrap().max_abs_diff(&Motion::identity()), 0.0);
    }

    #[test]
    fn track_churn_replaces_points() {
        let mut cfg = one_object([0.0, 0.0, 0.0, 0.3, 0.0, 0.0], Vec::new());
        cfg.num_frames = 12;
        cfg.objects[0].num_points = 6;
        cfg.objects[0].track_lifetime = 3;
        let (gt, frames) = generate_scene(&cfg).unwrap();
        for f in &frames {
            assert_eq!(f.dynamic_obs[&1].len(), 6);
        }
        assert!(gt.object(1).unwrap().body_points.len() > 6 * 3);
    }

    #[test]
    fn feature_cap_limits_observations() {
        let mut cfg = one_object([0.0; 6], Vec::new());
        cfg.objects[0].num_points = 50;
        cfg.max_features_per_object = 7;
        let (_, frames) = generate_scene(&cfg).unwrap();
        assert!(frames.iter().all(|f| f.dynamic_obs[&1].len() == 7));
    }

    #[test]
    fn rejects_never_visible_object() {
        let mut cfg = one_object([0.0; 6], vec![[0.0; 3]; 3]);
        cfg.objects[0].visibility = Some([3, 9]);
        assert!(matches!(generate_scene(&cfg), Err(Error::InvalidConfig(_))));
        cfg.objects[0].visibility = Some([4, 2]);
        assert!(generate_scene(&cfg).is_err());
    }

    #[test]
    fn waypoint_path_hits_waypoints() {
        let mut cfg = SceneConfig::stationary(9);
        let w = vec![
            Pose::identity(),
            Pose::rot_z(0.4, Vector3::new(2.0, 0.0, 0.0)),
            Pose::exp(&twist([0.1, 0.0, -0.3], [4.0, 1.0, 0.0])),
        ];
        cfg.camera = CameraPath::Waypoints { poses: w.clone() };
        let (gt, _) = generate_scene(&cfg).unwrap();
        assert_eq!(gt.camera_poses.len(), 9);
        assert!(gt.camera_poses[4].max_abs_diff(&w[1]) < 1e-12);
        assert!(gt.camera_poses[8].max_abs_diff(&w[2]) < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = one_object([0.0, 0.0, 0.05, 0.5, 0.0, 0.0], Vec::new());
        cfg.objects[0].num_points = 8;
        cfg.odometry_noise = Some([0.001, 0.01]);
        let text = cfg.to_toml().unwrap();
        assert_eq!(SceneConfig::from_toml(&text).unwrap(), cfg);
    }
}
