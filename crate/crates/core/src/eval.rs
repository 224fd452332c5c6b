//! Trajectory and object-motion accuracy metrics, map reconstruction and the
//! report tables written after a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{recover_frame_motion, Formulation, ObjectState};
use crate::geometry::{point_to_world, Motion, Point3, Pose};
use crate::graph::{Key, KeyKind, Values};
use crate::sim::{GroundTruth, ObjectId};
use crate::smoothers::SmootherStats;

fn rmse(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

fn check_lengths(est: usize, gt: usize) -> Result<()> {
    if est != gt {
        return Err(Error::FrameMismatch(format!("estimate has {est} frames, ground truth {gt}")));
    }
    Ok(())
}

/// RMSE of `‖trans(gt_k⁻¹·est_k)‖` over frames. No alignment is applied.
pub fn ate(est: &[Pose], gt: &[Pose]) -> Result<f64> {
    check_lengths(est.len(), gt.len())?;
    if est.is_empty() {
        return Err(Error::FrameMismatch("empty trajectory".into()));
    }
    Ok(rmse(est.iter().zip(gt).map(|(e, g)| g.inverse().compose(e).translation().norm())))
}

/// Relative pose error over consecutive pairs: `(degrees, meters)` RMSE.
pub fn rpe(est: &[Pose], gt: &[Pose]) -> Result<(f64, f64)> {
    check_lengths(est.len(), gt.len())?;
    if est.len() < 2 {
        return Err(Error::FrameMismatch("relative pose error needs at least 2 frames".into()));
    }
    let errors: Vec<Pose> = (1..est.len())
        .map(|k| gt[k - 1].between(&gt[k]).inverse().compose(&est[k - 1].between(&est[k])))
        .collect();
    Ok((
        rmse(errors.iter().map(|e| e.angle().to_degrees())),
        rmse(errors.iter().map(|e| e.translation().norm())),
    ))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotionError {
    pub rot_deg: f64,
    pub trans: f64,
    pub frames: usize,
    /// Ground-truth frames without an estimate.
    pub missing: usize,
}

/// Per-frame world motion error `E_k = gt_k⁻¹·est_k` over frames present in
/// the ground truth.
pub fn motion_error(est: &BTreeMap<u32, Motion>, gt: &BTreeMap<u32, Motion>) -> MotionError {
    let errors: Vec<Motion> = gt
        .iter()
        .filter_map(|(k, g)| est.get(k).map(|e| g.inverse().compose(e)))
        .collect();
    MotionError {
        rot_deg: rmse(errors.iter().map(|e| e.angle().to_degrees())),
        trans: rmse(errors.iter().map(|e| e.translation().norm())),
        frames: errors.len(),
        missing: gt.len() - errors.len(),
    }
}

/// Camera poses for frames `0..n`.
pub fn camera_trajectory(values: &Values, n: u32) -> Result<Vec<Pose>> {
    (0..n).map(|k| values.pose(&Key::camera(k))).collect()
}

/// Per-frame world motions `H_{k-1,k}` of one object.
pub fn frame_motions(formulation: Formulation, state: &ObjectState, values: &Values) -> Result<BTreeMap<u32, Motion>> {
    let mut out = BTreeMap::new();
    for (&k, key) in &state.motion_keys {
        match formulation {
            Formulation::Baseline => {
                out.insert(k, values.motion(key)?);
            }
            Formulation::Hybrid => {
                if k - 1 == state.first_frame || state.motion_keys.contains_key(&(k - 1)) {
                    let prev = state.cumulative_motion(values, k - 1)?;
                    out.insert(k, recover_frame_motion(&prev, &values.motion(key)?));
                }
            }
        }
    }
    Ok(out)
}

/// World-frame points of object `j` at frame `k` from its object points and
/// cumulative motion. Hybrid estimates only.
pub fn reconstruct_object_map(values: &Values, state: &ObjectState, k: u32) -> Result<Vec<Point3>> {
    if k < state.first_frame {
        return Err(Error::UnknownFrame(k));
    }
    let h = state.cumulative_motion(values, k)?;
    state
        .tracks
        .values()
        .filter(|m| m.kind == KeyKind::ObjectPoint)
        .map(|m| Ok(point_to_world(&h, &state.embedded, &values.point(m)?)))
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ate_trans: f64,
    pub rpe_rot_deg: f64,
    pub rpe_trans: f64,
    pub objects: BTreeMap<ObjectId, MotionError>,
    /// Means over objects with at least one evaluated frame.
    pub me_rot_deg: f64,
    pub me_trans: f64,
}

/// Everything needed to score one run.
pub struct RunEstimate<'a> {
    pub cameras: &'a [Pose],
    pub motions: &'a BTreeMap<ObjectId, BTreeMap<u32, Motion>>,
}

pub fn evaluate(est: &RunEstimate<'_>, gt: &GroundTruth) -> Result<MetricReport> {
    let ate_trans = ate(est.cameras, &gt.camera_poses)?;
    let (rpe_rot_deg, rpe_trans) = rpe(est.cameras, &gt.camera_poses)?;
    let empty = BTreeMap::new();
    let objects: BTreeMap<ObjectId, MotionError> = gt
        .objects
        .iter()
        .map(|(j, truth)| (*j, motion_error(est.motions.get(j).unwrap_or(&empty), &truth.frame_motions)))
        .collect();
    let scored: Vec<&MotionError> = objects.values().filter(|m| m.frames > 0).collect();
    let mean = |f: fn(&MotionError) -> f64| {
        if scored.is_empty() {
            0.0
        } else {
            scored.iter().map(|m| f(m)).sum::<f64>() / scored.len() as f64
        }
    };
    Ok(MetricReport { ate_trans, rpe_rot_deg, rpe_trans, me_rot_deg: mean(|m| m.rot_deg), me_trans: mean(|m| m.trans), objects })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed(String),
}

/// One method's record: metrics, per-frame stats and timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub status: RunStatus,
    pub frames_processed: u32,
    pub metrics: Option<MetricReport>,
    pub stats: Vec<SmootherStats>,
    pub per_object: BTreeMap<ObjectId, Vec<SmootherStats>>,
    pub total_update_ms: f64,
    pub avg_update_ms: f64,
    pub max_clique: usize,
    pub mean_max_clique: f64,
    pub avg_clique: f64,
    pub mean_reelim: f64,
}

pub const ALIGNMENT_NOTE: &str = "ATE is computed without trajectory alignment; the first camera pose is fixed by a prior in every method.";

/// Builds a method record; structural summaries come from `stats`.
pub fn assemble_report(
    method: &str,
    status: RunStatus,
    frames_processed: u32,
    metrics: Option<MetricReport>,
    stats: Vec<SmootherStats>,
    per_object: BTreeMap<ObjectId, Vec<SmootherStats>>,
    total_update_ms: f64,
) -> MethodReport {
    let n = stats.len().max(1) as f64;
    MethodReport {
        method: method.to_string(),
        status,
        frames_processed,
        metrics,
        max_clique: stats.iter().map(|s| s.max_clique).max().unwrap_or(0),
        mean_max_clique: stats.iter().map(|s| s.max_clique as f64).sum::<f64>() / n,
        avg_clique: stats.iter().map(|s| s.avg_clique).sum::<f64>() / n,
        mean_reelim: stats.iter().map(|s| s.reelim_vars as f64).sum::<f64>() / n,
        avg_update_ms: if frames_processed == 0 { 0.0 } else { total_update_ms / frames_processed as f64 },
        total_update_ms,
        stats,
        per_object,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub sequence: String,
    pub seed: u64,
    pub note: String,
    pub methods: Vec<MethodReport>,
}

/// Deterministic columns only; timing goes to `timing.csv`.
pub const METRICS_HEADER: &str =
    "sequence,method,status,ate_trans,rpe_rot_deg,rpe_trans,me_rot_deg,me_trans,max_clique,mean_max_clique,avg_clique,mean_reelim";

pub const TIMING_HEADER: &str = "sequence,method,frames,avg_update_ms,total_update_ms";

impl SequenceReport {
    pub fn new(sequence: &str, seed: u64) -> Self {
        SequenceReport { sequence: sequence.to_string(), seed, note: ALIGNMENT_NOTE.to_string(), methods: Vec::new() }
    }

    pub fn method(&self, name: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = format!("{METRICS_HEADER}\n");
        for m in &self.methods {
            let status = match &m.status {
                RunStatus::Ok => "ok",
                RunStatus::Failed(_) => "failed",
            };
            let metric = |f: fn(&MetricReport) -> f64| m.metrics.as_ref().map_or(String::new(), |r| format!("{:.9}", f(r)));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                self.sequence,
                m.method,
                status,
                metric(|r| r.ate_trans),
                metric(|r| r.rpe_rot_deg),
                metric(|r| r.rpe_trans),
                metric(|r| r.me_rot_deg),
                metric(|r| r.me_trans),
                m.max_clique,
                m.mean_max_clique,
                m.avg_clique,
                m.mean_reelim
            );
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = format!("{TIMING_HEADER}\n");
        for m in &self.methods {
            let _ = writeln!(out, "{},{},{},{:.6},{:.6}", self.sequence, m.method, m.frames_processed, m.avg_update_ms, m.total_update_ms);
        }
        out
    }

    pub fn stats_csv(method: &MethodReport) -> String {
        let mut out = format!("{}\n", SmootherStats::CSV_HEADER);
        for s in &method.stats {
            let _ = writeln!(out, "{}", s.csv_line());
        }
        out
    }

    pub fn per_object_csv(method: &MethodReport) -> String {
        let mut out = format!("object_id,{}\n", SmootherStats::CSV_HEADER);
        for (j, rows) in &method.per_object {
            for s in rows {
                let _ = writeln!(out, "{j},{}", s.csv_line());
            }
        }
        out
    }

    /// Accuracy table relative to the first successful batch Baseline row
    /// (or the first successful row), then a timing table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sequence: {}  seed: {}", self.sequence, self.seed);
        let _ = writeln!(out, "note: {}\n", self.note);
        let ok: Vec<&MethodReport> = self.methods.iter().filter(|m| m.metrics.is_some()).collect();
        let reference = ok.iter().find(|m| m.method == "Baseline").or(ok.first()).and_then(|m| m.metrics.clone());
        let _ = writeln!(out, "accuracy (relative change vs {} in brackets)", reference.as_ref().map_or("-", |_| "reference"));
        let _ = writeln!(
            out,
            "{:<16} {:>18} {:>18} {:>18} {:>18} {:>18}",
            "method", "ATE m", "RPE deg", "RPE m", "ME deg", "ME m"
        );
        for m in &self.methods {
            match (&m.metrics, &m.status) {
                (Some(r), _) => {
                    let cell = |v: f64, base: Option<f64>| match base {
                        Some(b) if b > 0.0 => format!("{v:.4e} ({:+.0}%)", 100.0 * (v - b) / b),
                        _ => format!("{v:.4e}"),
                    };
                    let b = reference.as_ref();
                    let _ = writeln!(
                        out,
                        "{:<16} {:>18} {:>18} {:>18} {:>18} {:>18}",
                        m.method,
                        cell(r.ate_trans, b.map(|b| b.ate_trans)),
                        cell(r.rpe_rot_deg, b.map(|b| b.rpe_rot_deg)),
                        cell(r.rpe_trans, b.map(|b| b.rpe_trans)),
                        cell(r.me_rot_deg, b.map(|b| b.me_rot_deg)),
                        cell(r.me_trans, b.map(|b| b.me_trans))
                    );
                }
                (None, RunStatus::Failed(reason)) => {
                    let _ = writeln!(out, "{:<16} x failed after {} frames: {reason}", m.method, m.frames_processed);
                }
                (None, RunStatus::Ok) => {
                    let _ = writeln!(out, "{:<16} (no metrics)", m.method);
                }
            }
        }
        let _ = writeln!(out, "\ntiming (smoother update only)");
        let _ = writeln!(out, "{:<16} {:>14} {:>14} {:>11} {:>11} {:>11}", "method", "avg ms/frame", "total ms", "max clique", "avg clique", "avg reelim");
        for m in &self.methods {
            let failed = if matches!(m.status, RunStatus::Failed(_)) { " x" } else { "" };
            let _ = writeln!(
                out,
                "{:<16} {:>14.3} {:>14.3} {:>11} {:>11.2} {:>11.2}{failed}",
                m.method, m.avg_update_ms, m.total_update_ms, m.max_clique, m.avg_clique, m.mean_reelim
            );
        }
        out
    }

    /// Writes `report.json`, `report.txt`, `metrics.csv`, `timing.csv` and per-method stats.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join("report.json"), json)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        std::fs::write(dir.join("timing.csv"), self.timing_csv())?;
        for m in &self.methods {
            let slug = method_slug(&m.method);
            std::fs::write(dir.join(format!("stats_{slug}.csv")), Self::stats_csv(m))?;
            if !m.per_object.is_empty() {
                std::fs::write(dir.join(format!("per_object_{slug}.csv")), Self::per_object_csv(m))?;
            }
        }
        Ok(())
    }
}

/// File-name form of a method label, e.g. `Parallel-Hybrid` → `parallel_hybrid`.
pub fn method_slug(name: &str) -> String {
    name.to_lowercase().replace('-', "_")
}
