use std::collections::BTreeMap;

use super::{align_points, embedded_frame, static_delta, BuilderParams, DeltaPart, FrameDelta, ObjectRegistry, ObjectState};
use crate::error::Result;
use crate::factors::Factor;
use crate::geometry::{Motion, Point3};
use crate::graph::{Key, Values};
use crate::sim::FrameMeasurements;

/// World-centric formulation: a world point per track per frame, linked across
/// consecutive frames by the per-frame object motion `H_{k-1,k}`.
pub fn baseline_process_frame(
    registry: &mut ObjectRegistry,
    params: &BuilderParams,
    estimate: &Values,
    z: &FrameMeasurements,
) -> Result<FrameDelta> {
    let k = z.frame;
    let (x, camera, static_part) = static_delta(registry, params, estimate, z)?;
    let mut delta = FrameDelta { frame: k, camera: Some(x), static_part, objects: Default::default() };
    let noise = params.sigmas.point_noise();

    for (&j, obs) in &z.dynamic_obs {
        if obs.len() < params.min_points {
            continue;
        }
        let world: Vec<Point3> = obs.iter().map(|(_, zz)| camera.transform_point(zz)).collect();
        let mut part = DeltaPart::default();
        let mut points = BTreeMap::new();
        for ((track, zz), w) in obs.iter().zip(&world) {
            let m = Key::dynamic_point(j, k, *track);
            part.values.insert_point(m, *w)?;
            part.factors.push(Factor::point_observation(x, m, *zz, noise.clone())?);
            points.insert(*track, m);
        }

        let state = registry.objects.entry(j).or_insert_with(|| ObjectState {
            embedded: embedded_frame(params, j, &world),
            first_frame: k,
            frames: Vec::new(),
            motion_keys: Default::default(),
            tracks: Default::default(),
        });
        let linked: Vec<(Key, Key, Point3)> = obs
            .iter()
            .zip(&world)
            .filter_map(|((track, _), w)| state.tracks.get(track).map(|prev| (*prev, points[track], *w)))
            .collect();
        let consecutive = k > 0 && state.frames.last() == Some(&(k - 1));
        if consecutive && linked.len() >= params.min_points {
            let h = Key::motion(j, k);
            let motion = initial_motion(state, estimate, &linked, k)?;
            part.values.insert_motion(h, motion)?;
            for (prev, curr, _) in &linked {
                part.factors.push(Factor::baseline_motion(*prev, *curr, h, params.sigmas.baseline_motion_noise())?);
            }
            if let Some(prev_h) = state.motion_keys.get(&(k - 1)) {
                part.factors.push(Factor::baseline_smoothing(*prev_h, h, params.sigmas.smoothing_noise())?);
            }
            state.motion_keys.insert(k, h);
        }
        state.tracks = points;
        state.frames.push(k);
        delta.objects.insert(j, part);
    }
    Ok(delta)
}

fn initial_motion(state: &ObjectState, estimate: &Values, linked: &[(Key, Key, Point3)], k: u32) -> Result<Motion> {
    let mut src = Vec::with_capacity(linked.len());
    let mut dst = Vec::with_capacity(linked.len());
    for (prev, _, w) in linked {
        src.push(estimate.point(prev)?);
        dst.push(*w);
    }
    if let Some(h) = align_points(&src, &dst) {
        return Ok(h);
    }
    match state.motion_keys.get(&(k - 1)) {
        Some(prev) => estimate.motion(prev),
        None => Ok(Motion::identity()),
    }
}
