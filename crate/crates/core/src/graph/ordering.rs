//! Fill-reducing elimination orderings.

use std::collections::{BTreeSet, HashMap};

use super::factor_graph::FactorGraph;
use super::key::Key;

/// Elimination order over a set of keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering(Vec<Key>);

impl Ordering {
    pub fn new(keys: Vec<Key>) -> Self {
        Ordering(keys)
    }

    pub fn keys(&self) -> &[Key] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, key: &Key) -> Option<usize> {
        self.0.iter().position(|k| k == key)
    }

    pub fn into_keys(self) -> Vec<Key> {
        self.0
    }
}

/// Minimum-degree ordering of the graph's variables with `constrained_last`
/// eliminated after everything else. Ties are broken by key order.
pub fn compute_ordering(graph: &FactorGraph, constrained_last: &BTreeSet<Key>) -> Ordering {
    let keys: Vec<Key> = graph.keys().collect();
    let cliques: Vec<Vec<Key>> = graph.iter().map(|(_, f)| f.keys().to_vec()).collect();
    Ordering(constrained_min_degree(&keys, cliques.iter().map(|c| c.as_slice()), constrained_last))
}

/// Minimum-degree elimination over the variable adjacency induced by
/// `cliques` (each slice is a set of mutually connected keys).
pub fn constrained_min_degree<'a>(
    keys: &[Key],
    cliques: impl IntoIterator<Item = &'a [Key]>,
    constrained_last: &BTreeSet<Key>,
) -> Vec<Key> {
    let groups: HashMap<Key, u8> = constrained_last.iter().map(|k| (*k, 1)).collect();
    grouped_min_degree(keys, cliques, &groups)
}

/// Minimum degree within constraint groups: keys in a higher group are
/// eliminated after every key in a lower one. Missing keys are group 0.
pub fn grouped_min_degree<'a>(keys: &[Key], cliques: impl IntoIterator<Item = &'a [Key]>, groups: &HashMap<Key, u8>) -> Vec<Key> {
    let mut sorted: Vec<Key> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    let index: HashMap<Key, usize> = sorted.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let n = sorted.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for clique in cliques {
        let ids: Vec<usize> = clique.iter().filter_map(|k| index.get(k).copied()).collect();
        for &a in &ids {
            for &b in &ids {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let group: Vec<u8> = sorted.iter().map(|k| groups.get(k).copied().unwrap_or(0)).collect();
    let mut degree: Vec<usize> = adj.iter().map(BTreeSet::len).collect();
    let mut queue: BTreeSet<(u8, usize, usize)> = (0..n).map(|i| (group[i], degree[i], i)).collect();
    let mut out = Vec::with_capacity(n);

    while let Some(entry) = queue.pop_first() {
        let v = entry.2;
        out.push(sorted[v]);
        let neighbors: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &neighbors {
            adj[u].remove(&v);
        }
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &u in &neighbors {
            queue.remove(&(group[u], degree[u], u));
            degree[u] = adj[u].len();
            queue.insert((group[u], degree[u], u));
        }
    }
    out
}
