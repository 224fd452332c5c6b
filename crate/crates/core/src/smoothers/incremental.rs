use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::stats::SmootherStats;
use crate::error::{Error, Result};
use crate::factors::Factor;
use crate::graph::bayes_tree::positions;
use crate::graph::linear::eliminate_sequential;
use crate::graph::ordering::grouped_min_degree;
use crate::graph::{BayesTree, CliqueId, FactorGraph, FactorId, HessianFactor, Key, Values};

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementalParams {
    /// Relinearization is considered only on every `relinearize_skip`-th update.
    pub relinearize_skip: usize,
    /// Tangent-norm threshold for poses and motions.
    pub pose_threshold: f64,
    /// Threshold for points, in meters.
    pub point_threshold: f64,
    /// Abort when the tree's dense conditional storage exceeds this many bytes.
    pub budget_bytes: Option<usize>,
}

impl Default for IncrementalParams {
    fn default() -> Self {
        IncrementalParams { relinearize_skip: 10, pose_threshold: 0.1, point_threshold: 0.05, budget_bytes: None }
    }
}

impl IncrementalParams {
    pub fn validate(&self) -> Result<()> {
        if self.relinearize_skip == 0 {
            return Err(Error::InvalidConfig("relinearize_skip must be at least 1".into()));
        }
        if !(self.pose_threshold > 0.0 && self.point_threshold > 0.0) {
            return Err(Error::InvalidConfig("relinearization thresholds must be positive".into()));
        }
        Ok(())
    }

    fn threshold(&self, key: &Key) -> f64 {
        if key.is_pose_like() {
            self.pose_threshold
        } else {
            self.point_threshold
        }
    }
}

/// One batch of changes handed to [`IncrementalSmoother::update`].
#[derive(Clone, Debug, Default)]
pub struct UpdateInput {
    pub factors: Vec<Factor>,
    pub values: Values,
    pub remove: Vec<FactorId>,
    /// Keys to eliminate last (closest to the root), after the other keys
    /// touched by this update.
    pub constrained: BTreeSet<Key>,
}

#[derive(Clone, Debug)]
pub struct UpdateOutput {
    pub stats: SmootherStats,
    pub factor_ids: Vec<FactorId>,
    /// Cliques built by this update.
    pub reeliminated_cliques: Vec<CliqueId>,
}

/// Bayes-tree smoother that re-eliminates only the top of the tree touched by
/// new factors and relinearized variables, then back-substitutes fully.
#[derive(Clone, Debug)]
pub struct IncrementalSmoother {
    params: IncrementalParams,
    graph: FactorGraph,
    theta: Values,
    delta: BTreeMap<Key, DVector<f64>>,
    tree: BayesTree,
    linear: HashMap<FactorId, HessianFactor>,
    updates: usize,
    relinearized: Vec<Key>,
}

impl IncrementalSmoother {
    pub fn new(params: IncrementalParams) -> Result<Self> {
        params.validate()?;
        Ok(IncrementalSmoother {
            params,
            graph: FactorGraph::new(),
            theta: Values::new(),
            delta: BTreeMap::new(),
            tree: BayesTree::new(),
            linear: HashMap::new(),
            updates: 0,
            relinearized: Vec::new(),
        })
    }

    pub fn params(&self) -> &IncrementalParams {
        &self.params
    }

    pub fn graph(&self) -> &FactorGraph {
        &self.graph
    }

    pub fn tree(&self) -> &BayesTree {
        &self.tree
    }

    /// Linearization point.
    pub fn linearization_point(&self) -> &Values {
        &self.theta
    }

    /// Number of completed updates.
    pub fn num_updates(&self) -> usize {
        self.updates
    }

    pub fn estimate(&self) -> Values {
        self.theta.retract(&self.delta)
    }

    /// Current estimate of a single variable.
    pub fn value(&self, key: &Key) -> Result<crate::graph::Variable> {
        let v = self.theta.variable(key)?;
        Ok(match self.delta.get(key) {
            Some(d) => v.retract(d.as_slice()),
            None => *v,
        })
    }

    /// Keys relinearized by the last update.
    pub fn relinearization_events(&self) -> &[Key] {
        &self.relinearized
    }

    /// Marginal covariance of `key` at the current linearization point.
    pub fn marginal_covariance(&self, key: &Key) -> Result<DMatrix<f64>> {
        self.tree.marginal_covariance(key)
    }

    pub fn update(&mut self, input: UpdateInput) -> Result<UpdateOutput> {
        let start = Instant::now();
        let UpdateInput { factors, values, remove, constrained } = input;

        if let Some(k) = values.keys().find(|k| self.theta.contains(k)) {
            return Err(Error::DuplicateKey(*k));
        }
        for f in &factors {
            if let Some(k) = f.keys().iter().find(|k| !self.theta.contains(k) && !values.contains(k)) {
                return Err(Error::UnknownFactorKey(*k));
            }
        }
        if let Some(id) = remove.iter().find(|id| self.graph.get(**id).is_none()) {
            return Err(Error::UnknownFactor(*id));
        }

        let new_keys: BTreeSet<Key> = values.keys().copied().collect();
        let mut marked: BTreeSet<Key> = BTreeSet::new();
        let mut new_factor_keys: BTreeSet<Key> = BTreeSet::new();
        for id in &remove {
            let f = self.graph.remove(*id).expect("checked above");
            self.linear.remove(id);
            marked.extend(f.keys().iter().copied());
        }
        self.theta.extend(&values)?;
        for (k, v) in values.iter() {
            self.delta.insert(*k, DVector::zeros(v.dim()));
        }
        let mut factor_ids = Vec::with_capacity(factors.len());
        for f in factors {
            new_factor_keys.extend(f.keys().iter().copied());
            factor_ids.push(self.graph.add(f));
        }
        marked.extend(new_factor_keys.iter().copied());

        self.updates += 1;
        self.relinearized.clear();
        if self.updates % self.params.relinearize_skip == 0 {
            let relin: Vec<Key> = self
                .delta
                .iter()
                .filter(|(k, d)| d.norm() >= self.params.threshold(k) && !new_keys.contains(k))
                .filter(|(k, _)| self.graph.factors_of(k).any(|id| !self.graph.get(id).expect("live factor").is_linear()))
                .map(|(k, _)| *k)
                .collect();
            for k in &relin {
                let d = self.delta.get_mut(k).expect("delta exists");
                let v = self.theta.variable(k)?.retract(d.as_slice());
                self.theta.set(*k, v)?;
                d.fill(0.0);
                for id in self.graph.factors_of(k).collect::<Vec<_>>() {
                    self.linear.remove(&id);
                    marked.extend(self.graph.get(id).expect("live factor").keys().iter().copied());
                }
            }
            self.relinearized = relin;
        }

        let (detached, orphans) = self.tree.detach_top(&marked);
        let affected: BTreeSet<Key> = detached
            .into_iter()
            .chain(self.theta.keys().filter(|k| !self.tree.contains(k)).copied())
            .collect();

        let mut reeliminated = Vec::new();
        if !affected.is_empty() {
            let factor_ids_in: BTreeSet<FactorId> = affected
                .iter()
                .flat_map(|k| self.graph.factors_of(k))
                .filter(|id| {
                    self.graph.get(*id).expect("live factor").keys().iter().all(|k| affected.contains(k))
                })
                .collect();
            let mut system = Vec::with_capacity(factor_ids_in.len() + orphans.len());
            for id in &factor_ids_in {
                if !self.linear.contains_key(id) {
                    let j = self.graph.get(*id).expect("live factor").linearize(&self.theta)?;
                    self.linear.insert(*id, HessianFactor::from_jacobian(&j));
                }
                system.push(self.linear[id].clone());
            }
            system.extend(orphans.iter().map(|o| self.tree.cached_factor(*o).clone()));

            // touched keys go last, the caller's constrained keys at the very end
            let mut groups: HashMap<Key, u8> = new_factor_keys
                .iter()
                .chain(&self.relinearized)
                .filter(|k| affected.contains(k))
                .map(|k| (*k, 1))
                .collect();
            groups.extend(constrained.iter().filter(|k| affected.contains(k)).map(|k| (*k, 2)));
            let keys: Vec<Key> = affected.iter().copied().collect();
            let order = grouped_min_degree(&keys, system.iter().map(|f| f.keys()), &groups);
            let steps = eliminate_sequential(system, &order)?;
            reeliminated = self.tree.insert_eliminated(steps, &positions(&order), &orphans);
        }

        if let Some(budget) = self.params.budget_bytes {
            let used = self.tree.storage_bytes();
            if used > budget {
                return Err(Error::BudgetExceeded(format!(
                    "Bayes tree needs {used} bytes after update {}, budget is {budget}",
                    self.updates
                )));
            }
        }

        self.delta = self.tree.solve();
        let stats = SmootherStats {
            frame: self.updates as u32,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            reelim_vars: affected.len(),
            relinearized: self.relinearized.len(),
            total_vars: self.theta.len(),
            ..Default::default()
        }
        .with_cliques(&self.tree.clique_stats());
        Ok(UpdateOutput { stats, factor_ids, reeliminated_cliques: reeliminated })
    }
}
