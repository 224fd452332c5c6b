#![allow(dead_code)]

use std::collections::BTreeMap;

use dynslam::factors::{Factor, NoiseModel};
use dynslam::geometry::{Motion, Point3, Pose, Twist};
use dynslam::graph::{FactorGraph, Key, Values, Variable};
use dynslam::smoothers::{IncrementalParams, IncrementalSmoother, UpdateInput};
use nalgebra::{DMatrix, DVector, Matrix4, Rotation3, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 4×4 twist matrix for `(ω, ρ)`.
pub fn twist_matrix(xi: &Twist) -> Matrix4<f64> {
    let (w, v) = (xi.fixed_rows::<3>(0), xi.fixed_rows::<3>(3));
    Matrix4::new(
        0.0, -w[2], w[1], v[0], //
        w[2], 0.0, -w[0], v[1], //
        -w[1], w[0], 0.0, v[2], //
        0.0, 0.0, 0.0, 0.0,
    )
}

/// SE(3) exponential by Padé matrix exponentiation.
pub fn expm(xi: &Twist) -> Matrix4<f64> {
    twist_matrix(xi).exp()
}

/// `X·exp(δ)` computed on homogeneous matrices.
pub fn right_perturb(x: &Variable, delta: &[f64]) -> Variable {
    match x {
        Variable::Pose(p) => Variable::Pose(Pose::from_matrix(&(p.to_matrix() * expm(&Vector6::from_column_slice(delta))))),
        Variable::Motion(m) => Variable::Motion(Motion::from_matrix(&(m.to_matrix() * expm(&Vector6::from_column_slice(delta))))),
        Variable::Point(p) => Variable::Point(p + Vector3::from_column_slice(delta)),
    }
}

/// Central-difference Jacobians of the unwhitened residual, one block per key.
pub fn fd_jacobians(factor: &Factor, values: &Values, step: f64) -> Vec<DMatrix<f64>> {
    let rows = factor.residual(values).unwrap().len();
    factor
        .keys()
        .iter()
        .map(|key| {
            let x = *values.get(key).unwrap();
            let dim = x.dim();
            let mut block = DMatrix::zeros(rows, dim);
            for j in 0..dim {
                let mut d = vec![0.0; dim];
                let mut eval = |s: f64| {
                    d[j] = s;
                    let mut v = values.clone();
                    v.set(*key, right_perturb(&x, &d)).unwrap();
                    factor.residual(&v).unwrap()
                };
                let col = (eval(step) - eval(-step)) / (2.0 * step);
                block.set_column(j, &col);
            }
            block
        })
        .collect()
}

/// `‖A − B‖ / max(‖B‖, 1)` over all blocks.
pub fn relative_error(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y.norm_squared()).sum::<f64>().sqrt();
    diff / scale.max(1.0)
}

pub fn random_twist(rng: &mut impl Rng, rot: f64, trans: f64) -> Twist {
    let mut xi = Twist::zeros();
    for i in 0..3 {
        xi[i] = rng.random_range(-rot..rot);
        xi[i + 3] = rng.random_range(-trans..trans);
    }
    xi
}

pub fn random_pose(rng: &mut impl Rng) -> Pose {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let angle = rng.random_range(0.0..3.0);
    let t = Vector3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
    let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
    Pose::from_parts(rot, t)
}

pub fn random_point(rng: &mut impl Rng, scale: f64) -> Point3 {
    Point3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub const FACTOR_KINDS: [&str; 11] = [
    "prior",
    "odometry",
    "point_obs",
    "hybrid_motion",
    "hybrid_motion_identity",
    "object_smoothing",
    "object_smoothing_identity",
    "baseline_motion",
    "baseline_smoothing",
    "point_prior",
    "point_between",
];

/// A factor of the named kind at a random, well-conditioned configuration.
/// Relative transforms are kept well below π so residual logs stay smooth.
pub fn random_factor(kind: &str, rng: &mut impl Rng) -> (Factor, Values) {
    let noise6 = NoiseModel::pose(0.1, 0.2).unwrap();
    let noise3 = NoiseModel::isotropic(3, 0.05).unwrap();
    let (x0, x1) = (Key::camera(0), Key::camera(1));
    let (h1, h2, h3) = (Key::motion(1, 1), Key::motion(1, 2), Key::motion(1, 3));
    let (m0, m1) = (Key::object_point(1, 0), Key::dynamic_point(1, 1, 0));
    let mut v = Values::new();
    let pose = random_pose(rng);
    let f = match kind {
        "prior" => {
            v.insert_pose(x0, pose).unwrap();
            Factor::pose_prior(x0, pose.retract(&random_twist(rng, 0.5, 1.0)), noise6).unwrap()
        }
        "odometry" => {
            let b = pose.compose(&Pose::exp(&random_twist(rng, 0.5, 2.0)));
            v.insert_pose(x0, pose).unwrap();
            v.insert_pose(x1, b).unwrap();
            let odo: Motion = pose.between(&b).reinterpret().retract(&random_twist(rng, 0.3, 0.5));
            Factor::between(x0, x1, odo, noise6).unwrap()
        }
        "point_obs" => {
            v.insert_pose(x0, pose).unwrap();
            v.insert_point(m0, random_point(rng, 10.0)).unwrap();
            Factor::point_observation(x0, m0, random_point(rng, 10.0), noise3).unwrap()
        }
        "hybrid_motion" | "hybrid_motion_identity" => {
            let embedded = random_pose(rng);
            v.insert_pose(x0, pose).unwrap();
            v.insert_point(m0, random_point(rng, 2.0)).unwrap();
            let h = if kind == "hybrid_motion" {
                v.insert_motion(h1, Motion::exp(&random_twist(rng, 0.4, 2.0))).unwrap();
                Some(h1)
            } else {
                None
            };
            Factor::hybrid_motion(x0, h, m0, embedded, random_point(rng, 10.0), noise3).unwrap()
        }
        "object_smoothing" | "object_smoothing_identity" => {
            let embedded = random_pose(rng);
            // small increments keep the body-frame motion difference away from π
            let a = Motion::exp(&random_twist(rng, 0.3, 1.0));
            let b = a.compose(&Motion::exp(&random_twist(rng, 0.3, 1.0)));
            let c = b.compose(&Motion::exp(&random_twist(rng, 0.3, 1.0)));
            v.insert_motion(h2, b).unwrap();
            v.insert_motion(h3, c).unwrap();
            let first = if kind == "object_smoothing" {
                v.insert_motion(h1, a).unwrap();
                Some(h1)
            } else {
                None
            };
            Factor::object_smoothing(first, h2, h3, embedded, noise6).unwrap()
        }
        "baseline_motion" => {
            v.insert_point(m0, random_point(rng, 10.0)).unwrap();
            v.insert_point(m1, random_point(rng, 10.0)).unwrap();
            v.insert_motion(h1, Motion::exp(&random_twist(rng, 1.0, 3.0))).unwrap();
            Factor::baseline_motion(m0, m1, h1, noise3).unwrap()
        }
        "baseline_smoothing" => {
            let a = Motion::exp(&random_twist(rng, 1.0, 3.0));
            v.insert_motion(h1, a).unwrap();
            v.insert_motion(h2, a.compose(&Motion::exp(&random_twist(rng, 0.5, 1.0)))).unwrap();
            Factor::baseline_smoothing(h1, h2, noise6).unwrap()
        }
        "point_prior" => {
            v.insert_point(m0, random_point(rng, 10.0)).unwrap();
            Factor::point_prior(m0, random_point(rng, 10.0), noise3).unwrap()
        }
        "point_between" => {
            v.insert_point(m0, random_point(rng, 10.0)).unwrap();
            v.insert_point(m1, random_point(rng, 10.0)).unwrap();
            Factor::point_between(m0, m1, random_point(rng, 3.0), noise3).unwrap()
        }
        other => panic!("unknown factor kind {other}"),
    };
    (f, v)
}

pub fn p(i: u64) -> Key {
    Key::static_point(i)
}

/// Dense least squares over the stacked whitened Jacobian via the normal equations.
pub fn dense_oracle(graph: &FactorGraph, values: &Values) -> BTreeMap<Key, Vector3<f64>> {
    let keys: Vec<Key> = values.keys().copied().collect();
    let col: BTreeMap<Key, usize> = keys.iter().enumerate().map(|(i, k)| (*k, 3 * i)).collect();
    let lin = graph.linearize(values, Default::default()).unwrap();
    let rows: usize = lin.iter().map(|(_, j)| j.rows()).sum();
    let mut a = DMatrix::zeros(rows, 3 * keys.len());
    let mut b = DVector::zeros(rows);
    let mut r = 0;
    for (_, j) in &lin {
        for (k, blk) in j.keys.iter().zip(&j.blocks) {
            a.view_mut((r, col[k]), (j.rows(), 3)).copy_from(blk);
        }
        b.rows_mut(r, j.rows()).copy_from(&j.b);
        r += j.rows();
    }
    let x = a.tr_mul(&a).cholesky().unwrap().solve(&a.tr_mul(&b));
    keys.iter()
        .map(|k| (*k, values.point(k).unwrap() + Vector3::from_column_slice(x.rows(col[k], 3).as_slice())))
        .collect()
}

pub struct LinearSchedule {
    pub steps: Vec<(Vec<Factor>, Values)>,
}

pub fn linear_schedule(seed: u64, num_vars: u64, num_steps: usize) -> LinearSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = |rng: &mut ChaCha8Rng| NoiseModel::isotropic(3, rng.random_range(0.1..2.0)).unwrap();
    let vec = |rng: &mut ChaCha8Rng, s: f64| Vector3::from_fn(|_, _| rng.random_range(-s..s));
    let per_step = (num_vars as usize).div_ceil(num_steps);
    let mut steps = Vec::new();
    let mut next = 0u64;
    for s in 0..num_steps {
        let mut factors = Vec::new();
        let mut values = Values::new();
        for _ in 0..per_step {
            if next >= num_vars {
                break;
            }
            let k = p(next);
            values.insert_point(k, vec(&mut rng, 5.0)).unwrap();
            if next == 0 || rng.random_bool(0.15) {
                factors.push(Factor::point_prior(k, vec(&mut rng, 5.0), noise(&mut rng)).unwrap());
            }
            if next > 0 {
                let links = rng.random_range(1..=2);
                for _ in 0..links {
                    let other = p(rng.random_range(0..next));
                    factors.push(Factor::point_between(other, k, vec(&mut rng, 2.0), noise(&mut rng)).unwrap());
                }
            }
            next += 1;
        }
        // loop-closure style links between existing variables
        if s > 0 && next > 2 {
            for _ in 0..rng.random_range(0..3) {
                let a = rng.random_range(0..next);
                let b = rng.random_range(0..next);
                if a != b {
                    factors.push(Factor::point_between(p(a), p(b), vec(&mut rng, 2.0), noise(&mut rng)).unwrap());
                }
            }
        }
        steps.push((factors, values));
    }
    LinearSchedule { steps }
}

pub fn check_linear_exactness(seed: u64, num_vars: u64, num_steps: usize, skip: usize) -> f64 {
    let schedule = linear_schedule(seed, num_vars, num_steps);
    let params = IncrementalParams { relinearize_skip: skip, ..Default::default() };
    let mut smoother = IncrementalSmoother::new(params).unwrap();
    let mut graph = FactorGraph::new();
    let mut initial = Values::new();
    let mut worst: f64 = 0.0;
    for (factors, values) in schedule.steps {
        for f in &factors {
            graph.add(f.clone());
        }
        initial.extend(&values).unwrap();
        smoother.update(UpdateInput { factors, values, ..Default::default() }).unwrap();
        assert!(smoother.relinearization_events().is_empty());
        smoother.tree().check_invariants().unwrap();
        let oracle = dense_oracle(&graph, &initial);
        let est = smoother.estimate();
        for (k, want) in &oracle {
            let err = (est.point(k).unwrap() - want).norm() / want.norm().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}
