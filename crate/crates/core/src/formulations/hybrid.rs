use super::{align_points, embedded_frame, static_delta, BuilderParams, DeltaPart, FrameDelta, ObjectRegistry, ObjectState};
use crate::error::Result;
use crate::factors::{init_object_point, Factor};
use crate::geometry::{Motion, Point3, PoseTag};
use crate::graph::{Key, Values};
use crate::sim::FrameMeasurements;

/// Hybrid formulation: one object point per track in the embedded frame and
/// one cumulative motion `H_{e,k}` per frame after the first sighting.
pub fn hybrid_process_frame(
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

        let Some(state) = registry.objects.get_mut(&j) else {
            let embedded = embedded_frame(params, j, &world);
            let mut state = ObjectState {
                embedded,
                first_frame: k,
                frames: vec![k],
                motion_keys: Default::default(),
                tracks: Default::default(),
            };
            let to_local = embedded.inverse();
            for ((track, zz), w) in obs.iter().zip(&world) {
                let m = Key::object_point(j, *track);
                part.values.insert_point(m, to_local.transform_point(w))?;
                state.tracks.insert(*track, m);
                part.factors.push(Factor::hybrid_motion(x, None, m, embedded, *zz, noise.clone())?);
            }
            registry.objects.insert(j, state);
            delta.objects.insert(j, part);
            continue;
        };

        let embedded = state.embedded;
        let h = Key::motion(j, k);
        let motion = initial_motion(state, estimate, obs, &world)?;
        part.values.insert_motion(h, motion)?;
        let current = motion.compose(&embedded.reinterpret()).reinterpret::<PoseTag>();
        for (track, zz) in obs {
            let m = match state.tracks.get(track) {
                Some(m) => *m,
                None => {
                    let m = Key::object_point(j, *track);
                    part.values.insert_point(m, init_object_point(&camera, &motion, &embedded, &current, zz))?;
                    state.tracks.insert(*track, m);
                    m
                }
            };
            part.factors.push(Factor::hybrid_motion(x, Some(h), m, embedded, *zz, noise.clone())?);
        }

        // constant-motion smoothing needs three consecutive frames
        let e = state.first_frame;
        if k >= e + 2 && state.observed_at(k - 1) && state.observed_at(k - 2) {
            let first = (k - 2 != e).then(|| state.motion_keys[&(k - 2)]);
            let second = state.motion_keys[&(k - 1)];
            part.factors.push(Factor::object_smoothing(first, second, h, embedded, params.sigmas.smoothing_noise())?);
        }
        state.motion_keys.insert(k, h);
        state.frames.push(k);
        delta.objects.insert(j, part);
    }
    Ok(delta)
}

/// Aligns re-observed points (`H·L_e·m ≈ X·z`); falls back to repeating the
/// last world-frame step, or the previous motion when only one is known.
fn initial_motion(state: &ObjectState, estimate: &Values, obs: &[(u64, Point3)], world: &[Point3]) -> Result<Motion> {
    let mut model = Vec::new();
    let mut seen = Vec::new();
    for ((track, _), w) in obs.iter().zip(world) {
        if let Some(m) = state.tracks.get(track) {
            model.push(state.embedded.transform_point(&estimate.point(m)?));
            seen.push(*w);
        }
    }
    if let Some(h) = align_points(&model, &seen) {
        return Ok(h);
    }
    let last = state.last_frame();
    let prev = state.cumulative_motion(estimate, last)?;
    let before = state.frames.len().checked_sub(2).map(|i| state.frames[i]);
    Ok(match before {
        Some(b) => {
            let step = prev.compose(&state.cumulative_motion(estimate, b)?.inverse());
            step.compose(&prev)
        }
        None => prev,
    })
}
