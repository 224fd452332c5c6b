use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{compute_ordering, BayesTree, CliqueStats, FactorGraph, HessianFactor, Values};

#[derive(Clone, Debug, PartialEq)]
pub struct BatchParams {
    pub max_iterations: usize,
    pub lambda_initial: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    pub lambda_max: f64,
    pub abs_tolerance: f64,
    pub rel_tolerance: f64,
    pub exec: Execution,
}

impl Default for BatchParams {
    fn default() -> Self {
        BatchParams {
            max_iterations: 100,
            lambda_initial: 1e-5,
            lambda_up: 10.0,
            lambda_down: 0.1,
            lambda_max: 1e10,
            abs_tolerance: 1e-14,
            rel_tolerance: 1e-12,
            exec: Execution::default(),
        }
    }
}

impl BatchParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.lambda_initial >= 0.0
            && self.lambda_up > 1.0
            && self.lambda_down > 0.0
            && self.lambda_down < 1.0
            && self.abs_tolerance >= 0.0
            && self.rel_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("batch parameters out of range: {self:?}")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub values: Values,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Accepted steps.
    pub iterations: usize,
    pub wall_ms: f64,
    pub cliques: CliqueStats,
    /// Dense conditional storage of the last elimination.
    pub storage_bytes: usize,
    /// Cost after every accepted step.
    pub cost_history: Vec<f64>,
}

/// Levenberg-Marquardt over the whole graph with `λ·I` damping.
pub fn batch_solve(graph: &FactorGraph, initial: &Values, params: &BatchParams) -> Result<BatchResult> {
    params.validate()?;
    graph.check_keys(initial)?;
    let start = Instant::now();
    let keys: Vec<_> = graph.keys().collect();
    if let Some(k) = initial.keys().find(|k| !graph.contains_key(k)) {
        return Err(Error::RankDeficient(*k));
    }
    let ordering = compute_ordering(graph, &Default::default());

    let mut values = initial.clone();
    let mut cost = graph.cost(&values)?;
    let initial_cost = cost;
    // Gauss-Newton steps until one fails to reduce the cost, then damping.
    let mut lambda = 0.0;
    let mut iterations = 0;
    let mut history = vec![cost];
    let mut cliques = CliqueStats::default();
    let mut storage_bytes = 0;
    let mut first = true;

    'outer: for _ in 0..params.max_iterations {
        let base = linearize(graph, &values, params.exec)?;
        loop {
            let mut system = base.clone();
            if lambda > 0.0 {
                system.extend(keys.iter().map(|k| HessianFactor::damping(*k, lambda)));
            }
            let step = BayesTree::eliminate(system, &ordering).and_then(|tree| {
                cliques = tree.clique_stats();
                storage_bytes = tree.storage_bytes();
                let candidate = values.retract(&tree.solve());
                graph.cost(&candidate).map(|c| (candidate, c))
            });
            match step {
                Ok((candidate, new_cost)) if new_cost.is_finite() && new_cost <= cost => {
                    let decrease = cost - new_cost;
                    values = candidate;
                    cost = new_cost;
                    iterations += 1;
                    history.push(cost);
                    lambda *= params.lambda_down;
                    first = false;
                    if decrease <= params.abs_tolerance || decrease <= params.rel_tolerance * (cost + decrease) {
                        break 'outer;
                    }
                    break;
                }
                // an undamped first solve exposes gauge freedom with the offending key
                Err(e @ Error::RankDeficient(_)) if first => return Err(e),
                Ok(_) | Err(Error::RankDeficient(_)) => {
                    lambda = if lambda == 0.0 { params.lambda_initial.max(1e-12) } else { lambda * params.lambda_up };
                    if lambda > params.lambda_max {
                        break 'outer;
                    }
                }
                Err(e) => return Err(e),
            }
            first = false;
        }
    }
    Ok(BatchResult {
        values,
        initial_cost,
        final_cost: cost,
        iterations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        cliques,
        storage_bytes,
        cost_history: history,
    })
}

fn linearize(graph: &FactorGraph, values: &Values, exec: Execution) -> Result<Vec<HessianFactor>> {
    Ok(graph
        .linearize(values, exec)?
        .iter()
        .map(|(_, j)| HessianFactor::from_jacobian(j))
        .collect())
}
