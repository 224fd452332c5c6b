//! Named experiments: simulate a scene, build the graph with one formulation,
//! solve it with one solver and score the result.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{assemble_report, camera_trajectory, evaluate, frame_motions, MethodReport, RunEstimate, RunStatus, SequenceReport};
use crate::exec::Execution;
use crate::factors::FactorSigmas;
use crate::formulations::{BuilderParams, Formulation, GraphBuilder};
use crate::geometry::{twist, Motion, Pose};
use crate::graph::{FactorGraph, Values, Variable};
use crate::parallel::ParallelRunner;
use crate::sim::{generate_scene, FrameMeasurements, GroundTruth, ObjectId, SceneConfig};
use crate::smoothers::{batch_solve, BatchParams, IncrementalParams, IncrementalSmoother, SmootherStats, UpdateInput};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Batch,
    Incremental,
    Parallel,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Batch => "batch",
            Solver::Incremental => "incremental",
            Solver::Parallel => "parallel",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(Solver::Batch),
            "incremental" => Ok(Solver::Incremental),
            "parallel" => Ok(Solver::Parallel),
            other => Err(Error::InvalidConfig(format!("unknown solver '{other}'"))),
        }
    }
}

/// Table label: `Hybrid`, `iBaseline`, `Parallel-Hybrid`, ...
pub fn method_name(formulation: Formulation, solver: Solver) -> String {
    let base = match formulation {
        Formulation::Hybrid => "Hybrid",
        Formulation::Baseline => "Baseline",
    };
    match solver {
        Solver::Batch => base.to_string(),
        Solver::Incremental => format!("i{base}"),
        Solver::Parallel => format!("Parallel-{base}"),
    }
}

/// The five methods compared by a suite.
pub const METHOD_MATRIX: [(Formulation, Solver); 5] = [
    (Formulation::Hybrid, Solver::Batch),
    (Formulation::Hybrid, Solver::Incremental),
    (Formulation::Baseline, Solver::Batch),
    (Formulation::Baseline, Solver::Incremental),
    (Formulation::Hybrid, Solver::Parallel),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncrementalSettings {
    pub relinearize_skip: usize,
    pub pose_threshold: f64,
    pub point_threshold: f64,
}

impl Default for IncrementalSettings {
    fn default() -> Self {
        let p = IncrementalParams::default();
        IncrementalSettings { relinearize_skip: p.relinearize_skip, pose_threshold: p.pose_threshold, point_threshold: p.point_threshold }
    }
}

/// Measurement noise applied on top of the scene file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseOverrides {
    pub noise_sigma: Option<f64>,
    pub odometry_noise: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Inline scene; exclusive with `scene_file`.
    #[serde(default)]
    pub scene: Option<SceneConfig>,
    #[serde(default)]
    pub scene_file: Option<PathBuf>,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    #[serde(default)]
    pub incremental: IncrementalSettings,
    #[serde(default)]
    pub noise: NoiseOverrides,
    /// Factor sigmas; point and odometry sigmas follow the scene noise unless
    /// set explicitly here.
    #[serde(default)]
    pub sigmas: Option<FactorSigmas>,
    /// Overrides the scene's RNG seed.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Batch solvers start from initial values perturbed by uniform noise of
    /// `[rotation rad, translation m]`.
    #[serde(default)]
    pub initial_perturbation: Option<[f64; 2]>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub budget_mb: Option<f64>,
    #[serde(default)]
    pub execution: Option<Execution>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_formulation() -> Formulation {
    Formulation::Hybrid
}

fn default_solver() -> Solver {
    Solver::Incremental
}

impl ExperimentConfig {
    pub fn new(scene: SceneConfig, formulation: Formulation, solver: Solver) -> Self {
        ExperimentConfig {
            name: default_name(),
            scene: Some(scene),
            scene_file: None,
            formulation,
            solver,
            incremental: IncrementalSettings::default(),
            noise: NoiseOverrides::default(),
            sigmas: None,
            seed: None,
            initial_perturbation: None,
            out: None,
            budget_mb: None,
            execution: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(cfg)
    }

    /// Parses a config file; a relative `scene_file` resolves against its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(f), Some(dir)) = (&cfg.scene_file, path.parent()) {
            if f.is_relative() {
                cfg.scene_file = Some(dir.join(f));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver == Solver::Parallel && self.formulation != Formulation::Hybrid {
            return Err(Error::InvalidConfig("the parallel solver requires the hybrid formulation".into()));
        }
        if self.scene.is_some() == self.scene_file.is_some() {
            return Err(Error::InvalidConfig("exactly one of `scene` and `scene_file` must be given".into()));
        }
        if let Some(b) = self.budget_mb {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidConfig("budget_mb must be positive".into()));
            }
        }
        if let Some([r, t]) = self.initial_perturbation {
            if !(r >= 0.0 && t >= 0.0) {
                return Err(Error::InvalidConfig("initial_perturbation must be non-negative".into()));
            }
        }
        if let Some(s) = &self.sigmas {
            s.validate()?;
        }
        self.incremental_params().validate()
    }

    /// The scene with seed and noise overrides applied.
    pub fn resolve_scene(&self) -> Result<SceneConfig> {
        let mut scene = match (&self.scene, &self.scene_file) {
            (Some(s), None) => s.clone(),
            (None, Some(path)) => SceneConfig::from_toml(&std::fs::read_to_string(path)?)?,
            _ => return Err(Error::InvalidConfig("exactly one of `scene` and `scene_file` must be given".into())),
        };
        if let Some(seed) = self.seed {
            scene.rng_seed = seed;
        }
        if let Some(s) = self.noise.noise_sigma {
            scene.noise_sigma = s;
        }
        if self.noise.odometry_noise.is_some() {
            scene.odometry_noise = self.noise.odometry_noise;
        }
        scene.validate()?;
        Ok(scene)
    }

    pub fn incremental_params(&self) -> IncrementalParams {
        IncrementalParams {
            relinearize_skip: self.incremental.relinearize_skip,
            pose_threshold: self.incremental.pose_threshold,
            point_threshold: self.incremental.point_threshold,
            budget_bytes: self.budget_mb.map(|mb| (mb * 1024.0 * 1024.0) as usize),
        }
    }

    /// Method settings for `formulation` × `solver` on `scene`.
    pub fn method(&self, scene: &SceneConfig, formulation: Formulation, solver: Solver) -> MethodSpec {
        let mut sigmas = self.sigmas.unwrap_or_else(|| scene_sigmas(scene));
        if self.sigmas.is_none() && scene.noise_sigma > 0.0 {
            sigmas.point = scene.noise_sigma;
        }
        let exec = self.execution.unwrap_or_default();
        MethodSpec {
            formulation,
            solver,
            builder: BuilderParams { sigmas, ..BuilderParams::default() },
            incremental: self.incremental_params(),
            batch: BatchParams { exec, ..BatchParams::default() },
            perturbation: self.initial_perturbation,
            perturbation_seed: scene.rng_seed,
            exec,
        }
    }
}

/// Default sigmas matched to a scene's noise levels.
pub fn scene_sigmas(scene: &SceneConfig) -> FactorSigmas {
    let mut s = FactorSigmas::default();
    if scene.noise_sigma > 0.0 {
        s.point = scene.noise_sigma;
    }
    if let Some([r, t]) = scene.odometry_noise {
        if r > 0.0 {
            s.odometry_rot = r;
        }
        if t > 0.0 {
            s.odometry_trans = t;
        }
    }
    s
}

/// Everything that selects and tunes one method.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub formulation: Formulation,
    pub solver: Solver,
    pub builder: BuilderParams,
    pub incremental: IncrementalParams,
    pub batch: BatchParams,
    pub perturbation: Option<[f64; 2]>,
    pub perturbation_seed: u64,
    pub exec: Execution,
}

impl MethodSpec {
    pub fn name(&self) -> String {
        method_name(self.formulation, self.solver)
    }
}

/// A simulated scene with its measurements.
#[derive(Clone, Debug)]
pub struct SceneData {
    pub config: SceneConfig,
    pub truth: GroundTruth,
    pub frames: Vec<FrameMeasurements>,
}

impl SceneData {
    pub fn generate(config: &SceneConfig) -> Result<Self> {
        let (truth, frames) = generate_scene(config)?;
        Ok(SceneData { config: config.clone(), truth, frames })
    }
}

/// A finished (or failed) run with its final estimate.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: MethodReport,
    pub cameras: Vec<Pose>,
    pub motions: BTreeMap<ObjectId, BTreeMap<u32, Motion>>,
    /// Final joint estimate; for Parallel-Hybrid the merged estimate without
    /// the per-object camera copies.
    pub estimate: Values,
    pub builder: GraphBuilder,
}

/// Uniform perturbation of every variable: `[-r, r]` per rotation axis and
/// `[-t, t]` per translation or point axis.
pub fn perturb_values(values: &Values, rot: f64, trans: f64, seed: u64) -> Values {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |s: f64| if s > 0.0 { rng.random_range(-s..s) } else { 0.0 };
    let mut out = Values::new();
    for (k, v) in values.iter() {
        let p = match v {
            Variable::Pose(_) | Variable::Motion(_) => {
                let xi = twist([u(rot), u(rot), u(rot)], [u(trans), u(trans), u(trans)]);
                v.retract(xi.as_slice())
            }
            Variable::Point(_) => v.retract(&[u(trans), u(trans), u(trans)]),
        };
        out.insert(*k, p).expect("keys are unique");
    }
    out
}

fn motions_of(builder: &GraphBuilder, values: &Values, skip: &BTreeMap<ObjectId, String>) -> Result<BTreeMap<ObjectId, BTreeMap<u32, Motion>>> {
    builder
        .registry
        .objects
        .iter()
        .filter(|(j, _)| !skip.contains_key(j))
        .map(|(j, s)| Ok((*j, frame_motions(builder.formulation, s, values)?)))
        .collect()
}

fn is_run_failure(e: &Error) -> bool {
    !matches!(e, Error::InvalidConfig(_) | Error::Parse(_) | Error::Io(_))
}

/// Runs one method on a scene. Budget exhaustion and solver failures produce a
/// report marked failed; only configuration errors are returned as `Err`.
pub fn run_method(spec: &MethodSpec, scene: &SceneData) -> Result<RunOutcome> {
    if spec.solver == Solver::Parallel && spec.formulation != Formulation::Hybrid {
        return Err(Error::InvalidConfig("the parallel solver requires the hybrid formulation".into()));
    }
    let n = scene.frames.len() as u32;
    let name = spec.name();
    let mut builder = GraphBuilder::new(spec.formulation, spec.builder.clone())?;
    let mut stats = Vec::new();
    let mut per_object: BTreeMap<ObjectId, Vec<SmootherStats>> = BTreeMap::new();
    let mut total_ms = 0.0;
    let mut processed = 0;
    let mut estimate = Values::new();
    let mut isolated: BTreeMap<ObjectId, String> = BTreeMap::new();

    let result: Result<()> = match spec.solver {
        Solver::Batch => (|| {
            let mut graph = FactorGraph::new();
            let mut initial = Values::new();
            for z in &scene.frames {
                let delta = builder.process_frame(&initial, z)?.joint()?;
                initial.extend(&delta.values)?;
                graph.extend(&delta.factors.into_iter().collect());
            }
            if let Some([r, t]) = spec.perturbation {
                initial = perturb_values(&initial, r, t, spec.perturbation_seed);
            }
            let solved = batch_solve(&graph, &initial, &spec.batch)?;
            processed = n;
            total_ms = solved.wall_ms;
            stats.push(
                SmootherStats {
                    frame: n - 1,
                    wall_ms: solved.wall_ms,
                    reelim_vars: solved.values.len(),
                    max_clique: solved.cliques.max_clique_vars,
                    avg_clique: solved.cliques.avg_clique_vars,
                    max_clique_dims: solved.cliques.max_clique_dims,
                    avg_clique_dims: solved.cliques.avg_clique_dims,
                    num_cliques: solved.cliques.num_cliques,
                    relinearized: 0,
                    total_vars: solved.values.len(),
                },
            );
            estimate = solved.values;
            if let Some(budget) = spec.incremental.budget_bytes {
                if solved.storage_bytes > budget {
                    return Err(Error::BudgetExceeded(format!(
                        "batch elimination needs {} bytes, budget is {budget}",
                        solved.storage_bytes
                    )));
                }
            }
            Ok(())
        })(),
        Solver::Incremental => (|| {
            let mut smoother = IncrementalSmoother::new(spec.incremental.clone())?;
            for z in &scene.frames {
                let delta = builder.process_frame(&estimate, z)?;
                let joint = delta.joint()?;
                let out = smoother.update(UpdateInput {
                    factors: joint.factors,
                    values: joint.values,
                    remove: Vec::new(),
                    constrained: delta.constrained(),
                })?;
                let mut s = out.stats;
                s.frame = z.frame;
                total_ms += s.wall_ms;
                stats.push(s);
                estimate = smoother.estimate();
                processed += 1;
            }
            Ok(())
        })(),
        Solver::Parallel => (|| {
            let mut runner = ParallelRunner::new(spec.builder.clone(), spec.incremental.clone(), spec.exec)?;
            let result = (|| {
                for z in &scene.frames {
                    let out = runner.process_frame(z)?;
                    total_ms += out.wall_ms;
                    stats.push(out.sfg);
                    for (j, s) in out.objects {
                        per_object.entry(j).or_default().push(s);
                    }
                    processed += 1;
                }
                Ok(())
            })();
            builder = runner.builder().clone();
            estimate = runner.merged_estimate().clone();
            isolated = runner.failed_objects();
            result
        })(),
    };

    let (status, metrics, cameras, motions) = match result {
        Ok(()) => {
            let cameras = camera_trajectory(&estimate, n)?;
            let motions = motions_of(&builder, &estimate, &isolated)?;
            let metrics = evaluate(&RunEstimate { cameras: &cameras, motions: &motions }, &scene.truth)?;
            // isolated objects keep the run going but mark it failed
            let status = match isolated.iter().next() {
                None => RunStatus::Ok,
                Some((j, e)) => RunStatus::Failed(format!("object {j} smoother failed: {e}")),
            };
            (status, Some(metrics), cameras, motions)
        }
        Err(e) if is_run_failure(&e) => (RunStatus::Failed(e.to_string()), None, Vec::new(), BTreeMap::new()),
        Err(e) => return Err(e),
    };
    let report = assemble_report(&name, status, processed, metrics, stats, per_object, total_ms);
    Ok(RunOutcome { report, cameras, motions, estimate, builder })
}

/// Runs the configured method and writes the report when `out` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SequenceReport> {
    config.validate()?;
    let scene_cfg = config.resolve_scene()?;
    let scene = SceneData::generate(&scene_cfg)?;
    let spec = config.method(&scene_cfg, config.formulation, config.solver);
    let outcome = run_method(&spec, &scene)?;
    let mut report = SequenceReport::new(&config.name, scene_cfg.rng_seed);
    report.methods.push(outcome.report);
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    Ok(report)
}

/// Runs the full method matrix on one scene.
pub fn run_suite(config: &ExperimentConfig) -> Result<SequenceReport> {
    let mut probe = config.clone();
    probe.solver = Solver::Incremental;
    probe.validate()?;
    let scene_cfg = config.resolve_scene()?;
    let scene = SceneData::generate(&scene_cfg)?;
    let mut report = SequenceReport::new(&config.name, scene_cfg.rng_seed);
    for (f, s) in METHOD_MATRIX {
        let outcome = run_method(&config.method(&scene_cfg, f, s), &scene)?;
        report.methods.push(outcome.report);
    }
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    Ok(report)
}

const PRESETS: [(&str, &str); 4] = [
    ("continuous-visibility-4obj", include_str!("../presets/continuous-visibility-4obj.toml")),
    ("desk-2obj", include_str!("../presets/desk-2obj.toml")),
    ("object-churn", include_str!("../presets/object-churn.toml")),
    ("static-only", include_str!("../presets/static-only.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// A shipped experiment config by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset '{name}'; known: {}", preset_names().collect::<Vec<_>>().join(", "))))?;
    let mut cfg = ExperimentConfig::from_toml(text)?;
    cfg.name = name.to_string();
    Ok(cfg)
}
