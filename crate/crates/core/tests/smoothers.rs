mod common;

use std::collections::BTreeSet;

use common::{check_linear_exactness, dense_oracle, linear_schedule, p};

use dynslam::factors::{Factor, NoiseModel};
use dynslam::graph::{FactorGraph, Key, Values};
use dynslam::smoothers::{batch_solve, BatchParams, IncrementalParams, IncrementalSmoother, UpdateInput};
use nalgebra::Vector3;
use proptest::prelude::*;

#[test]
fn linear_incremental_matches_dense_least_squares() {
    for seed in 0..8 {
        let err = check_linear_exactness(seed, 40, 12, 1 + (seed as usize % 3));
        assert!(err < 1e-9, "seed {seed}: {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn linear_incremental_equals_batch(seed in 0u64..10_000, vars in 10u64..50, steps in 10usize..16, skip in 1usize..11) {
        prop_assert!(check_linear_exactness(seed, vars, steps, skip) < 1e-9);
    }
}

#[test]
fn empty_update_reeliminates_nothing() {
    let schedule = linear_schedule(1, 12, 4);
    let mut smoother = IncrementalSmoother::new(IncrementalParams::default()).unwrap();
    for (factors, values) in schedule.steps {
        smoother.update(UpdateInput { factors, values, ..Default::default() }).unwrap();
    }
    let before = smoother.estimate();
    let out = smoother.update(UpdateInput::default()).unwrap();
    assert_eq!(out.stats.reelim_vars, 0);
    assert!(out.reeliminated_cliques.is_empty());
    let after = smoother.estimate();
    for (k, v) in before.iter() {
        assert!((v.local(after.variable(k).unwrap())).norm() == 0.0);
    }
}

#[test]
fn reelimination_count_matches_recount_of_new_cliques() {
    let schedule = linear_schedule(5, 30, 10);
    let mut smoother = IncrementalSmoother::new(IncrementalParams::default()).unwrap();
    for (factors, values) in schedule.steps {
        let out = smoother.update(UpdateInput { factors, values, ..Default::default() }).unwrap();
        let recount: usize = out
            .reeliminated_cliques
            .iter()
            .map(|c| smoother.tree().clique(*c).unwrap().num_frontals())
            .sum();
        assert_eq!(out.stats.reelim_vars, recount);
    }
}

#[test]
fn factor_removal_matches_rebuilt_graph() {
    let schedule = linear_schedule(9, 20, 5);
    let mut smoother = IncrementalSmoother::new(IncrementalParams::default()).unwrap();
    let mut graph = FactorGraph::new();
    let mut initial = Values::new();
    let mut ids = Vec::new();
    for (factors, values) in schedule.steps {
        for f in &factors {
            graph.add(f.clone());
        }
        initial.extend(&values).unwrap();
        ids.extend(smoother.update(UpdateInput { factors, values, ..Default::default() }).unwrap().factor_ids);
    }
    // drop a between factor whose removal keeps the problem well posed
    let victim = ids
        .iter()
        .copied()
        .rev()
        .find(|id| {
            let mut g = graph.clone();
            g.remove(*id);
            g.get(*id).is_none() && g.keys().count() == initial.len() && g.len() > 0 && {
                let keys: BTreeSet<Key> = g.keys().collect();
                keys.len() == initial.len() && batch_solve(&g, &initial, &BatchParams::default()).is_ok()
            }
        })
        .unwrap();
    graph.remove(victim);
    smoother.update(UpdateInput { remove: vec![victim], ..Default::default() }).unwrap();
    smoother.tree().check_invariants().unwrap();
    let oracle = dense_oracle(&graph, &initial);
    let est = smoother.estimate();
    for (k, want) in &oracle {
        assert!((est.point(k).unwrap() - want).norm() < 1e-9);
    }
}

#[test]
fn linear_batch_converges_in_two_iterations() {
    let schedule = linear_schedule(3, 25, 1);
    let (factors, values) = schedule.steps.into_iter().next().unwrap();
    let graph: FactorGraph = factors.into_iter().collect();
    let params = BatchParams { max_iterations: 2, ..Default::default() };
    let result = batch_solve(&graph, &values, &params).unwrap();
    assert!(result.iterations <= 2);
    let oracle = dense_oracle(&graph, &values);
    for (k, want) in &oracle {
        assert!((result.values.point(k).unwrap() - want).norm() < 1e-9 * want.norm().max(1.0));
    }
}

#[test]
fn batch_reports_gauge_freedom() {
    let a = p(0);
    let b = p(1);
    let graph: FactorGraph =
        [Factor::point_between(a, b, Vector3::x(), NoiseModel::isotropic(3, 1.0).unwrap()).unwrap()].into_iter().collect();
    let mut values = Values::new();
    values.insert_point(a, Vector3::zeros()).unwrap();
    values.insert_point(b, Vector3::zeros()).unwrap();
    let err = batch_solve(&graph, &values, &BatchParams::default()).unwrap_err();
    assert!(matches!(err, dynslam::Error::RankDeficient(_)));
}

#[test]
fn batch_on_single_prior_at_mean_is_zero_cost() {
    let k = Key::camera(0);
    let mean = dynslam::geometry::Pose::rot_z(0.3, Vector3::new(1.0, 2.0, 3.0));
    let graph: FactorGraph = [Factor::pose_prior(k, mean, NoiseModel::pose(0.1, 0.1).unwrap()).unwrap()].into_iter().collect();
    let mut values = Values::new();
    values.insert_pose(k, mean).unwrap();
    let result = batch_solve(&graph, &values, &BatchParams::default()).unwrap();
    assert_eq!(result.final_cost, 0.0);
    assert_eq!(result.values.pose(&k).unwrap().max_abs_diff(&mean), 0.0);
}

