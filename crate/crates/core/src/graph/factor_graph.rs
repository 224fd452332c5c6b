use std::collections::{BTreeMap, BTreeSet};

use super::key::Key;
use super::values::Values;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::factors::{Factor, JacobianFactor};

pub type FactorId = usize;

/// Nonlinear factor container. Factor ids are stable: removal leaves a hole.
#[derive(Clone, Debug, Default)]
pub struct FactorGraph {
    factors: Vec<Option<Factor>>,
    adjacency: BTreeMap<Key, BTreeSet<FactorId>>,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, factor: Factor) -> FactorId {
        let id = self.factors.len();
        for k in factor.keys() {
            self.adjacency.entry(*k).or_default().insert(id);
        }
        self.factors.push(Some(factor));
        id
    }

    pub fn remove(&mut self, id: FactorId) -> Option<Factor> {
        let f = self.factors.get_mut(id)?.take()?;
        for k in f.keys() {
            if let Some(set) = self.adjacency.get_mut(k) {
                set.remove(&id);
                if set.is_empty() {
                    self.adjacency.remove(k);
                }
            }
        }
        Some(f)
    }

    pub fn get(&self, id: FactorId) -> Option<&Factor> {
        self.factors.get(id).and_then(Option::as_ref)
    }

    /// Number of live factors.
    pub fn len(&self) -> usize {
        self.factors.iter().filter(|f| f.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One past the largest id ever issued.
    pub fn capacity(&self) -> usize {
        self.factors.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactorId, &Factor)> + '_ {
        self.factors.iter().enumerate().filter_map(|(i, f)| f.as_ref().map(|f| (i, f)))
    }

    pub fn factors(&self) -> impl Iterator<Item = &Factor> + '_ {
        self.factors.iter().flatten()
    }

    /// Keys touched by at least one live factor, in key order.
    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn factors_of(&self, key: &Key) -> impl Iterator<Item = FactorId> + '_ {
        self.adjacency.get(key).into_iter().flatten().copied()
    }

    pub fn contains_key(&self, key: &Key) -> bool {
        self.adjacency.contains_key(key)
    }

    pub fn neighbors(&self, key: &Key) -> BTreeSet<Key> {
        self.factors_of(key)
            .filter_map(|id| self.get(id))
            .flat_map(|f| f.keys().iter().copied())
            .filter(|k| k != key)
            .collect()
    }

    /// Appends every factor of `other`, returning the new ids.
    pub fn extend(&mut self, other: &FactorGraph) -> Vec<FactorId> {
        other.factors().cloned().map(|f| self.add(f)).collect()
    }

    /// Total cost `Σ ½‖r‖²_Σ`.
    pub fn cost(&self, values: &Values) -> Result<f64> {
        self.factors().map(|f| f.cost(values)).sum()
    }

    /// Linearizes every live factor; results are in id order.
    pub fn linearize(&self, values: &Values, exec: Execution) -> Result<Vec<(FactorId, JacobianFactor)>> {
        let live: Vec<(FactorId, &Factor)> = self.iter().collect();
        exec::map(exec, &live, |(id, f)| f.linearize(values).map(|j| (*id, j)))
            .into_iter()
            .collect()
    }

    /// Fails if a factor references a key without a value.
    pub fn check_keys(&self, values: &Values) -> Result<()> {
        match self.keys().find(|k| !values.contains(k)) {
            Some(k) => Err(Error::UnknownFactorKey(k)),
            None => Ok(()),
        }
    }
}

impl FromIterator<Factor> for FactorGraph {
    fn from_iter<T: IntoIterator<Item = Factor>>(iter: T) -> Self {
        let mut g = FactorGraph::new();
        for f in iter {
            g.add(f);
        }
        g
    }
}
