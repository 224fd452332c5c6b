//! Parallel-Hybrid: a static smoother over camera poses and static points,
//! plus one independent smoother per object conditioned on camera-pose priors
//! taken from the static smoother's posterior.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::factors::{Factor, NoiseModel};
use crate::formulations::{BuilderParams, DeltaPart, Formulation, GraphBuilder};
use crate::geometry::Pose;
use crate::graph::{FactorId, Key, KeyKind, Values, Variable};
use crate::sim::{FrameMeasurements, ObjectId};
use crate::smoothers::{IncrementalParams, IncrementalSmoother, SmootherStats, UpdateInput};

/// The φ₀ prior currently installed in a DOFG.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorHandle {
    pub factor: FactorId,
    pub mean: Pose,
    pub covariance: DMatrix<f64>,
}

#[derive(Clone, Debug)]
struct Dofg {
    smoother: IncrementalSmoother,
    /// Camera keys whose prior must be refreshed on the next update.
    pending: BTreeSet<Key>,
    failed: Option<String>,
}

/// Work for one DOFG in one frame.
struct Job<'a> {
    id: ObjectId,
    dofg: &'a mut Dofg,
    input: UpdateInput,
    priors: Vec<(Key, Pose, DMatrix<f64>)>,
    replaced: Vec<Key>,
}

struct JobResult {
    id: ObjectId,
    outcome: Result<(SmootherStats, Vec<(Key, FactorId)>)>,
    priors: Vec<(Key, Pose, DMatrix<f64>)>,
    replaced: Vec<Key>,
}

#[derive(Clone, Debug, Default)]
pub struct ParallelFrameOutput {
    pub frame: u32,
    pub sfg: SmootherStats,
    /// Stats of every DOFG updated this frame.
    pub objects: BTreeMap<ObjectId, SmootherStats>,
    /// Camera keys whose prior was replaced, per object.
    pub prior_replacements: BTreeMap<ObjectId, Vec<Key>>,
    /// Objects whose smoother failed this frame; they are dropped afterwards.
    pub failures: BTreeMap<ObjectId, String>,
    /// Wall time of the SFG update plus the joined DOFG phase.
    pub wall_ms: f64,
}

/// Per-object estimates kept apart so camera-pose copies never collide.
#[derive(Clone, Debug, Default)]
pub struct ParallelEstimate {
    pub static_values: Values,
    pub objects: BTreeMap<ObjectId, Values>,
}

impl ParallelEstimate {
    /// Static values plus every object's non-camera values.
    pub fn merged(&self) -> Result<Values> {
        let mut out = self.static_values.clone();
        for values in self.objects.values() {
            for (k, v) in values.iter().filter(|(k, _)| k.kind != KeyKind::CameraPose) {
                out.insert(*k, *v)?;
            }
        }
        Ok(out)
    }

    /// A DOFG's own copy of the camera pose at frame `k`.
    pub fn object_camera(&self, j: ObjectId, k: u32) -> Result<Pose> {
        self.objects.get(&j).ok_or(Error::UnknownObject(j))?.pose(&Key::camera(k))
    }
}

pub struct ParallelRunner {
    builder: GraphBuilder,
    params: IncrementalParams,
    exec: Execution,
    sfg: IncrementalSmoother,
    dofgs: BTreeMap<ObjectId, Dofg>,
    prior_registry: BTreeMap<(ObjectId, u32), PriorHandle>,
    estimate: ParallelEstimate,
    merged: Values,
}

impl ParallelRunner {
    pub fn new(builder: BuilderParams, params: IncrementalParams, exec: Execution) -> Result<Self> {
        Ok(ParallelRunner {
            builder: GraphBuilder::new(Formulation::Hybrid, builder)?,
            sfg: IncrementalSmoother::new(params.clone())?,
            params,
            exec,
            dofgs: BTreeMap::new(),
            prior_registry: BTreeMap::new(),
            estimate: ParallelEstimate::default(),
            merged: Values::new(),
        })
    }

    pub fn builder(&self) -> &GraphBuilder {
        &self.builder
    }

    pub fn sfg(&self) -> &IncrementalSmoother {
        &self.sfg
    }

    pub fn dofg(&self, j: ObjectId) -> Option<&IncrementalSmoother> {
        self.dofgs.get(&j).filter(|d| d.failed.is_none()).map(|d| &d.smoother)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.dofgs.keys().copied()
    }

    pub fn failed_objects(&self) -> BTreeMap<ObjectId, String> {
        self.dofgs.iter().filter_map(|(j, d)| d.failed.clone().map(|e| (*j, e))).collect()
    }

    pub fn prior(&self, j: ObjectId, k: u32) -> Option<&PriorHandle> {
        self.prior_registry.get(&(j, k))
    }

    pub fn estimate(&self) -> &ParallelEstimate {
        &self.estimate
    }

    /// Static values plus object structure and motions, as seen by the builder.
    pub fn merged_estimate(&self) -> &Values {
        &self.merged
    }

    /// Queues a prior refresh for every DOFG holding a prior on one of the
    /// relinearized camera poses. Other keys are ignored.
    pub fn propagate_relinearized_poses(&mut self, events: &[Key]) {
        for key in events.iter().filter(|k| k.kind == KeyKind::CameraPose) {
            for (j, dofg) in self.dofgs.iter_mut().filter(|(_, d)| d.failed.is_none()) {
                if self.prior_registry.contains_key(&(*j, key.frame)) {
                    dofg.pending.insert(*key);
                }
            }
        }
    }

    fn camera_prior(&self, key: &Key) -> Result<(Pose, DMatrix<f64>)> {
        let Variable::Pose(mean) = self.sfg.value(key)? else {
            return Err(Error::WrongVariableType(*key));
        };
        let cov = self.sfg.marginal_covariance(key)?;
        Ok((mean, (&cov + cov.transpose()) * 0.5))
    }

    pub fn process_frame(&mut self, z: &FrameMeasurements) -> Result<ParallelFrameOutput> {
        let mut z = z.clone();
        let failed: Vec<ObjectId> = self.failed_objects().into_keys().collect();
        z.dynamic_obs.retain(|j, _| !failed.contains(j));

        let delta = self.builder.process_frame(&self.merged, &z)?;
        let camera = delta.camera.expect("builders always add a camera");
        let start = Instant::now();
        let sfg_out = self.sfg.update(UpdateInput {
            factors: delta.static_part.factors.clone(),
            values: delta.static_part.values.clone(),
            remove: Vec::new(),
            constrained: [camera].into_iter().collect(),
        })?;
        let events = self.sfg.relinearization_events().to_vec();
        self.propagate_relinearized_poses(&events);

        let (mean, cov) = self.camera_prior(&camera)?;
        for j in delta.objects.keys() {
            if !self.dofgs.contains_key(j) {
                let smoother = IncrementalSmoother::new(self.params.clone())?;
                self.dofgs.insert(*j, Dofg { smoother, pending: BTreeSet::new(), failed: None });
            }
        }

        let mut refreshed: BTreeMap<Key, (Pose, DMatrix<f64>)> = BTreeMap::new();
        for key in self.dofgs.values().flat_map(|d| d.pending.iter()) {
            if !refreshed.contains_key(key) {
                refreshed.insert(*key, self.camera_prior(key)?);
            }
        }

        let mut jobs = Vec::new();
        for (j, dofg) in self.dofgs.iter_mut().filter(|(_, d)| d.failed.is_none()) {
            let part = delta.objects.get(j);
            if part.is_none() && dofg.pending.is_empty() {
                continue;
            }
            let mut input = UpdateInput::default();
            let mut priors = Vec::new();
            let mut replaced = Vec::new();
            for key in std::mem::take(&mut dofg.pending) {
                let old = self.prior_registry.get(&(*j, key.frame)).expect("pending keys have priors");
                let (m, c) = refreshed[&key].clone();
                input.remove.push(old.factor);
                input.factors.push(Factor::pose_prior(key, m, NoiseModel::from_covariance(&c)?)?);
                priors.push((key, m, c));
                replaced.push(key);
            }
            if let Some(DeltaPart { factors, values }) = part {
                input.values = values.clone();
                input.values.insert_pose(camera, mean)?;
                input.factors.push(Factor::pose_prior(camera, mean, NoiseModel::from_covariance(&cov)?)?);
                priors.push((camera, mean, cov.clone()));
                input.factors.extend(factors.iter().cloned());
                input.constrained = values.keys().filter(|k| k.kind == KeyKind::ObjectMotion).copied().collect();
                input.constrained.insert(camera);
            }
            jobs.push(Job { id: *j, dofg, input, priors, replaced });
        }

        let results = exec::map_mut(self.exec, &mut jobs, |job| {
            let prior_count = job.priors.len();
            let outcome = job.dofg.smoother.update(std::mem::take(&mut job.input)).map(|out| {
                // priors are pushed first, in the same order as `job.priors`
                let ids = job.priors.iter().map(|p| p.0).zip(out.factor_ids.iter().copied().take(prior_count)).collect();
                (out.stats, ids)
            });
            JobResult { id: job.id, outcome, priors: std::mem::take(&mut job.priors), replaced: std::mem::take(&mut job.replaced) }
        });
        drop(jobs);

        let mut output = ParallelFrameOutput { frame: z.frame, sfg: sfg_out.stats, ..Default::default() };
        output.sfg.frame = z.frame;
        for r in results {
            match r.outcome {
                Ok((mut stats, ids)) => {
                    stats.frame = z.frame;
                    for ((key, factor), (_, m, c)) in ids.into_iter().zip(r.priors) {
                        self.prior_registry.insert((r.id, key.frame), PriorHandle { factor, mean: m, covariance: c });
                    }
                    if !r.replaced.is_empty() {
                        output.prior_replacements.insert(r.id, r.replaced);
                    }
                    output.objects.insert(r.id, stats);
                }
                Err(e) => {
                    let dofg = self.dofgs.get_mut(&r.id).expect("job came from this map");
                    dofg.failed = Some(e.to_string());
                    output.failures.insert(r.id, e.to_string());
                }
            }
        }
        output.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        self.refresh_estimate()?;
        Ok(output)
    }

    fn refresh_estimate(&mut self) -> Result<()> {
        self.estimate.static_values = self.sfg.estimate();
        self.estimate.objects = self
            .dofgs
            .iter()
            .filter(|(_, d)| d.failed.is_none())
            .map(|(j, d)| (*j, d.smoother.estimate()))
            .collect();
        self.merged = self.estimate.merged()?;
        Ok(())
    }
}
