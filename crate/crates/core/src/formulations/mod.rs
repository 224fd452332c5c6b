//! Turns per-frame measurements into new factors and initial values for the
//! hybrid (object-centric points, world-centric cumulative motions) and the
//! world-centric baseline formulations.

mod align;
mod baseline;
mod hybrid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use align::align_points;
pub use baseline::baseline_process_frame;
pub use hybrid::hybrid_process_frame;

use crate::error::{Error, Result};
use crate::factors::{Factor, FactorSigmas};
use crate::geometry::{twist, Motion, Pose};
use crate::graph::{Key, KeyKind, Values};
use crate::sim::{FrameMeasurements, ObjectId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Hybrid,
    Baseline,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Hybrid => "hybrid",
            Formulation::Baseline => "baseline",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Formulation::Hybrid),
            "baseline" => Ok(Formulation::Baseline),
            other => Err(Error::InvalidConfig(format!("unknown formulation '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuilderParams {
    pub sigmas: FactorSigmas,
    /// Observations needed to instantiate an object or to add a motion for it.
    pub min_points: usize,
    pub use_odometry: bool,
    /// Mean of the gauge prior on the first camera pose.
    pub first_pose: Pose,
    /// When set, every embedded frame is offset by a random rigid transform
    /// drawn from this seed (per-object stream).
    pub embedded_offset_seed: Option<u64>,
}

impl Default for BuilderParams {
    fn default() -> Self {
        BuilderParams {
            sigmas: FactorSigmas::default(),
            min_points: 3,
            use_odometry: true,
            first_pose: Pose::identity(),
            embedded_offset_seed: None,
        }
    }
}

/// Per-object bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectState {
    /// `L_e`; fixed once set.
    pub embedded: Pose,
    /// `e`, the first frame with at least `min_points` observations.
    pub first_frame: u32,
    /// Frames at which the object entered the graph, ascending.
    pub frames: Vec<u32>,
    /// Motion variable per frame: `H_{e,k}` (hybrid) or `H_{k-1,k}` (baseline).
    pub motion_keys: BTreeMap<u32, Key>,
    /// Hybrid: every object point key by track. Baseline: the point keys of the
    /// most recent frame.
    pub tracks: BTreeMap<u64, Key>,
}

impl ObjectState {
    pub fn last_frame(&self) -> u32 {
        *self.frames.last().expect("registered objects have a frame")
    }

    pub fn observed_at(&self, k: u32) -> bool {
        self.frames.binary_search(&k).is_ok()
    }

    /// Hybrid cumulative motion `H_{e,k}`, the identity at `k = e`.
    pub fn cumulative_motion(&self, estimate: &Values, k: u32) -> Result<Motion> {
        if k == self.first_frame {
            return Ok(Motion::identity());
        }
        let key = self.motion_keys.get(&k).ok_or(Error::UnknownFrame(k))?;
        estimate.motion(key)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjectRegistry {
    pub objects: BTreeMap<ObjectId, ObjectState>,
    pub static_tracks: BTreeSet<u64>,
    pub cameras: Vec<u32>,
}

impl ObjectRegistry {
    pub fn object(&self, j: ObjectId) -> Result<&ObjectState> {
        self.objects.get(&j).ok_or(Error::UnknownObject(j))
    }

    pub fn last_camera(&self) -> Option<Key> {
        self.cameras.last().map(|k| Key::camera(*k))
    }
}

/// New factors and values for one part of the graph.
#[derive(Clone, Debug, Default)]
pub struct DeltaPart {
    pub factors: Vec<Factor>,
    pub values: Values,
}

impl DeltaPart {
    fn merge(&mut self, other: DeltaPart) -> Result<()> {
        self.factors.extend(other.factors);
        self.values.extend(&other.values)
    }
}

/// Everything one frame adds: camera, odometry and static structure in
/// `static_part`, object factors per object. Object factors reference the
/// frame's camera key, which lives in `static_part`.
#[derive(Clone, Debug, Default)]
pub struct FrameDelta {
    pub frame: u32,
    pub camera: Option<Key>,
    pub static_part: DeltaPart,
    pub objects: BTreeMap<ObjectId, DeltaPart>,
}

impl FrameDelta {
    /// All factors and values merged, for joint solving.
    pub fn joint(&self) -> Result<DeltaPart> {
        let mut out = self.static_part.clone();
        for part in self.objects.values() {
            out.merge(part.clone())?;
        }
        Ok(out)
    }

    /// The latest camera pose plus this frame's motion variables.
    pub fn constrained(&self) -> BTreeSet<Key> {
        let motions = self
            .objects
            .values()
            .flat_map(|p| p.values.keys())
            .filter(|k| k.kind == KeyKind::ObjectMotion)
            .copied();
        self.camera.into_iter().chain(motions).collect()
    }

    /// Fails unless every factor key is either in `existing` or created here.
    pub fn check_self_contained(&self, existing: &Values) -> Result<()> {
        let joint = self.joint()?;
        for f in &joint.factors {
            if let Some(k) = f.keys().iter().find(|k| !existing.contains(k) && !joint.values.contains(k)) {
                return Err(Error::UnknownFactorKey(*k));
            }
        }
        Ok(())
    }

    pub fn summary(&self, formulation: Formulation) -> Result<FrameSummary> {
        let joint = self.joint()?;
        let mut new_keys = BTreeMap::new();
        for k in joint.values.keys() {
            *new_keys.entry(k.kind.label().to_string()).or_insert(0) += 1;
        }
        let mut new_factors = BTreeMap::new();
        for f in &joint.factors {
            *new_factors.entry(f.kind().label().to_string()).or_insert(0) += 1;
        }
        Ok(FrameSummary { frame: self.frame, formulation, new_keys, new_factors })
    }
}

/// Symbolic size of one frame's delta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub frame: u32,
    pub formulation: Formulation,
    pub new_keys: BTreeMap<String, usize>,
    pub new_factors: BTreeMap<String, usize>,
}

impl FrameSummary {
    pub const CSV_HEADER: &'static str = "frame,formulation,new_keys_by_kind,new_factors_by_kind";

    pub fn csv_line(&self) -> String {
        let join = |m: &BTreeMap<String, usize>| m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
        format!("{},{},{},{}", self.frame, self.formulation, join(&self.new_keys), join(&self.new_factors))
    }

    pub fn keys_of(&self, kind: KeyKind) -> usize {
        self.new_keys.get(kind.label()).copied().unwrap_or(0)
    }

    pub fn factors_of(&self, label: &str) -> usize {
        self.new_factors.get(label).copied().unwrap_or(0)
    }
}

/// Stateful builder for either formulation.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    pub formulation: Formulation,
    pub params: BuilderParams,
    pub registry: ObjectRegistry,
}

impl GraphBuilder {
    pub fn new(formulation: Formulation, params: BuilderParams) -> Result<Self> {
        params.sigmas.validate()?;
        if params.min_points < 3 {
            return Err(Error::InvalidConfig("min_points must be at least 3".into()));
        }
        Ok(GraphBuilder { formulation, params, registry: ObjectRegistry::default() })
    }

    pub fn process_frame(&mut self, estimate: &Values, z: &FrameMeasurements) -> Result<FrameDelta> {
        match self.formulation {
            Formulation::Hybrid => hybrid_process_frame(&mut self.registry, &self.params, estimate, z),
            Formulation::Baseline => baseline_process_frame(&mut self.registry, &self.params, estimate, z),
        }
    }
}

/// Per-frame world motion `H_{k-1,k} = H_{e,k}·H_{e,k-1}⁻¹` from two
/// cumulative motions sharing the same embedded frame.
pub fn recover_frame_motion(prev: &Motion, curr: &Motion) -> Motion {
    curr.compose(&prev.inverse())
}

/// Camera key, optional gauge prior and odometry factor, and static points.
fn static_delta(registry: &mut ObjectRegistry, params: &BuilderParams, estimate: &Values, z: &FrameMeasurements) -> Result<(Key, Pose, DeltaPart)> {
    let k = z.frame;
    let x = Key::camera(k);
    let mut part = DeltaPart::default();
    let sigmas = &params.sigmas;
    let pose = match registry.last_camera() {
        None => {
            part.factors.push(Factor::pose_prior(x, params.first_pose, sigmas.prior_noise())?);
            params.first_pose
        }
        Some(prev) => {
            if prev.frame >= k {
                return Err(Error::FrameMismatch(format!("frame {k} arrived after frame {}", prev.frame)));
            }
            let prev_pose = estimate.pose(&prev)?;
            match (params.use_odometry, z.odometry) {
                (true, Some(odom)) => {
                    part.factors.push(Factor::between(prev, x, odom, sigmas.odometry_noise())?);
                    prev_pose.compose(&odom.reinterpret())
                }
                _ => {
                    // align re-observed static points; hold position otherwise
                    let (model, seen): (Vec<_>, Vec<_>) = z
                        .static_obs
                        .iter()
                        .filter(|(t, _)| registry.static_tracks.contains(t))
                        .filter_map(|(t, zz)| estimate.point(&Key::static_point(*t)).ok().map(|m| (m, *zz)))
                        .unzip();
                    match align_points(&seen, &model) {
                        Some(t) if model.len() >= params.min_points => t.reinterpret(),
                        _ => prev_pose,
                    }
                }
            }
        }
    };
    part.values.insert_pose(x, pose)?;
    for (track, zz) in &z.static_obs {
        let s = Key::static_point(*track);
        if registry.static_tracks.insert(*track) {
            part.values.insert_point(s, pose.transform_point(zz))?;
        }
        part.factors.push(Factor::point_observation(x, s, *zz, sigmas.point_noise())?);
    }
    registry.cameras.push(k);
    Ok((x, pose, part))
}

fn embedded_offset(params: &BuilderParams, j: ObjectId) -> Pose {
    match params.embedded_offset_seed {
        None => Pose::identity(),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let mut draw = |s: f64| -> [f64; 3] { [0; 3].map(|_: i32| rng.random_range(-s..s)) };
            let w = draw(1.5);
            let t = draw(3.0);
            Pose::exp(&twist(w, t))
        }
    }
}

/// `L_e` at the centroid of the first world-frame measurements, identity rotation.
fn embedded_frame(params: &BuilderParams, j: ObjectId, world: &[Vector3<f64>]) -> Pose {
    let centroid = world.iter().sum::<Vector3<f64>>() / world.len() as f64;
    Pose::from_translation(centroid).compose(&embedded_offset(params, j))
}
