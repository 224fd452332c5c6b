//! Clique tree of Gaussian conditionals produced by variable elimination.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::key::Key;
use super::linear::{eliminate_sequential, Conditional, EliminationStep, HessianFactor};
use super::ordering::Ordering;
use crate::error::{Error, Result};
use crate::factors::JacobianFactor;

pub type CliqueId = usize;

/// Clique with its frontal conditionals (in elimination order, the last one
/// is the top frontal) and the marginal factor it passes to its parent.
#[derive(Clone, Debug)]
pub struct Clique {
    pub conditionals: Vec<Conditional>,
    pub separator: Vec<Key>,
    pub parent: Option<CliqueId>,
    pub children: Vec<CliqueId>,
    pub(crate) cached: HessianFactor,
}

impl Clique {
    pub fn frontals(&self) -> impl Iterator<Item = Key> + '_ {
        self.conditionals.iter().map(|c| c.frontal)
    }

    pub fn num_frontals(&self) -> usize {
        self.conditionals.len()
    }

    /// Frontal plus separator variable count.
    pub fn size_vars(&self) -> usize {
        self.conditionals.len() + self.separator.len()
    }

    /// Frontal plus separator scalar dimension.
    pub fn size_dims(&self) -> usize {
        self.frontals().chain(self.separator.iter().copied()).map(|k| k.dim()).sum()
    }

    /// Dense storage needed by the clique's conditional block, in bytes.
    pub fn storage_bytes(&self) -> usize {
        let f: usize = self.frontals().map(|k| k.dim()).sum();
        8 * f * (self.size_dims() + 1)
    }
}

/// Clique size summary; sizes count frontal and separator variables.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CliqueStats {
    pub num_cliques: usize,
    pub max_clique_vars: usize,
    pub avg_clique_vars: f64,
    pub max_clique_dims: usize,
    pub avg_clique_dims: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BayesTree {
    cliques: Vec<Option<Clique>>,
    roots: BTreeSet<CliqueId>,
    key_to_clique: HashMap<Key, CliqueId>,
}

impl BayesTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Eliminates a linear system in `order` into a fresh tree.
    pub fn eliminate(factors: Vec<HessianFactor>, order: &Ordering) -> Result<Self> {
        let steps = eliminate_sequential(factors, order.keys())?;
        let mut tree = BayesTree::new();
        let position = positions(order.keys());
        tree.insert_eliminated(steps, &position, &[]);
        Ok(tree)
    }

    pub fn is_empty(&self) -> bool {
        self.key_to_clique.is_empty()
    }

    pub fn num_variables(&self) -> usize {
        self.key_to_clique.len()
    }

    pub fn contains(&self, key: &Key) -> bool {
        self.key_to_clique.contains_key(key)
    }

    pub fn clique(&self, id: CliqueId) -> Option<&Clique> {
        self.cliques.get(id).and_then(Option::as_ref)
    }

    pub fn clique_of(&self, key: &Key) -> Option<CliqueId> {
        self.key_to_clique.get(key).copied()
    }

    pub fn roots(&self) -> impl Iterator<Item = CliqueId> + '_ {
        self.roots.iter().copied()
    }

    pub fn cliques(&self) -> impl Iterator<Item = (CliqueId, &Clique)> + '_ {
        self.cliques.iter().enumerate().filter_map(|(i, c)| c.as_ref().map(|c| (i, c)))
    }

    pub fn keys(&self) -> impl Iterator<Item = Key> + '_ {
        self.key_to_clique.keys().copied()
    }

    /// Builds cliques from elimination steps (given in elimination order) and
    /// attaches `orphans` below the clique holding the first-eliminated key of
    /// their separator. `position` ranks every newly eliminated key.
    pub(crate) fn insert_eliminated(
        &mut self,
        steps: Vec<EliminationStep>,
        position: &HashMap<Key, usize>,
        orphans: &[CliqueId],
    ) -> Vec<CliqueId> {
        let mut created = Vec::new();
        for step in steps.into_iter().rev() {
            let EliminationStep { conditional, marginal } = step;
            let frontal = conditional.frontal;
            let parent = conditional.separator.first().map(|k| self.key_to_clique[k]);
            match parent {
                Some(p) if self.cliques[p].as_ref().map(Clique::size_vars) == Some(conditional.separator.len()) => {
                    let clique = self.cliques[p].as_mut().expect("parent clique exists");
                    clique.conditionals.insert(0, conditional);
                    self.key_to_clique.insert(frontal, p);
                }
                _ => {
                    let id = self.cliques.len();
                    let separator = conditional.separator.clone();
                    self.cliques.push(Some(Clique {
                        conditionals: vec![conditional],
                        separator,
                        parent,
                        children: Vec::new(),
                        cached: marginal,
                    }));
                    match parent {
                        Some(p) => self.cliques[p].as_mut().expect("parent clique exists").children.push(id),
                        None => {
                            self.roots.insert(id);
                        }
                    }
                    self.key_to_clique.insert(frontal, id);
                    created.push(id);
                }
            }
        }
        for &o in orphans {
            let sep = self.cliques[o].as_ref().expect("orphan clique exists").separator.clone();
            let first = sep
                .iter()
                .min_by_key(|k| position.get(*k).copied().unwrap_or(usize::MAX))
                .copied();
            match first {
                Some(k) => {
                    let p = self.key_to_clique[&k];
                    self.cliques[o].as_mut().expect("orphan").parent = Some(p);
                    self.cliques[p].as_mut().expect("parent").children.push(o);
                }
                None => {
                    self.cliques[o].as_mut().expect("orphan").parent = None;
                    self.roots.insert(o);
                }
            }
        }
        created
    }

    /// Removes every clique containing a marked key as a frontal together with
    /// its path to the root. Returns the removed cliques' frontal keys and the
    /// detached subtrees (orphans), whose cached marginals summarize them.
    pub(crate) fn detach_top(&mut self, marked: &BTreeSet<Key>) -> (Vec<Key>, Vec<CliqueId>) {
        let mut removed: BTreeSet<CliqueId> = BTreeSet::new();
        for key in marked {
            let mut current = self.key_to_clique.get(key).copied();
            while let Some(c) = current {
                if !removed.insert(c) {
                    break;
                }
                current = self.cliques[c].as_ref().and_then(|cl| cl.parent);
            }
        }
        let mut frontals = Vec::new();
        let mut orphans = Vec::new();
        for &c in &removed {
            let clique = self.cliques[c].take().expect("removed clique exists");
            self.roots.remove(&c);
            for k in clique.frontals() {
                self.key_to_clique.remove(&k);
                frontals.push(k);
            }
            orphans.extend(clique.children.iter().copied().filter(|ch| !removed.contains(ch)));
        }
        for &o in &orphans {
            self.cliques[o].as_mut().expect("orphan exists").parent = None;
        }
        (frontals, orphans)
    }

    pub(crate) fn cached_factor(&self, id: CliqueId) -> &HessianFactor {
        &self.cliques[id].as_ref().expect("clique exists").cached
    }

    /// Cliques in top-down order (every parent before its children).
    pub fn top_down(&self) -> Vec<CliqueId> {
        let mut out = Vec::with_capacity(self.cliques.len());
        let mut stack: Vec<CliqueId> = self.roots.iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            out.push(c);
            if let Some(cl) = self.clique(c) {
                stack.extend(cl.children.iter().rev().copied());
            }
        }
        out
    }

    /// Back-substitution over the whole tree.
    pub fn solve(&self) -> BTreeMap<Key, DVector<f64>> {
        let mut delta: BTreeMap<Key, DVector<f64>> = BTreeMap::new();
        for c in self.top_down() {
            let clique = self.clique(c).expect("listed clique exists");
            for cond in clique.conditionals.iter().rev() {
                let seps: Vec<&DVector<f64>> = cond.separator.iter().map(|k| &delta[k]).collect();
                let x = cond.solve(&seps);
                delta.insert(cond.frontal, x);
            }
        }
        delta
    }

    /// Marginal covariance block of `key`, i.e. the diagonal block of `(RᵀR)⁻¹`.
    pub fn marginal_covariance(&self, key: &Key) -> Result<DMatrix<f64>> {
        let start = self.clique_of(key).ok_or(Error::MissingKey(*key))?;
        let dim = key.dim();
        // Y = R^{-T} E_key, accumulated along the path from the key to the root.
        let mut acc: HashMap<Key, DMatrix<f64>> = HashMap::new();
        acc.insert(*key, DMatrix::identity(dim, dim));
        let mut cov = DMatrix::zeros(dim, dim);
        let mut current = Some(start);
        while let Some(c) = current {
            let clique = self.clique(c).expect("path clique exists");
            for cond in &clique.conditionals {
                let Some(rhs) = acc.remove(&cond.frontal) else { continue };
                let y = cond
                    .r
                    .transpose()
                    .solve_lower_triangular(&rhs)
                    .expect("conditional diagonal is nonzero");
                for (sk, s) in cond.separator.iter().zip(&cond.s) {
                    let contrib = s.tr_mul(&y);
                    acc.entry(*sk)
                        .and_modify(|a| *a -= &contrib)
                        .or_insert_with(|| -contrib);
                }
                cov += y.tr_mul(&y);
            }
            current = clique.parent;
        }
        Ok(cov)
    }

    pub fn clique_stats(&self) -> CliqueStats {
        let mut stats = CliqueStats::default();
        let mut sum_vars = 0usize;
        let mut sum_dims = 0usize;
        for (_, c) in self.cliques() {
            stats.num_cliques += 1;
            let v = c.size_vars();
            let d = c.size_dims();
            sum_vars += v;
            sum_dims += d;
            stats.max_clique_vars = stats.max_clique_vars.max(v);
            stats.max_clique_dims = stats.max_clique_dims.max(d);
        }
        if stats.num_cliques > 0 {
            stats.avg_clique_vars = sum_vars as f64 / stats.num_cliques as f64;
            stats.avg_clique_dims = sum_dims as f64 / stats.num_cliques as f64;
        }
        stats
    }

    pub fn storage_bytes(&self) -> usize {
        self.cliques().map(|(_, c)| c.storage_bytes()).sum()
    }

    /// Structural checks: every key is frontal in exactly one clique, parent
    /// links are consistent, and every separator is contained in its parent's
    /// frontal and separator keys (running intersection).
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen: HashMap<Key, CliqueId> = HashMap::new();
        for (id, c) in self.cliques() {
            for k in c.frontals() {
                if let Some(prev) = seen.insert(k, id) {
                    return Err(format!("{k} is frontal in cliques {prev} and {id}"));
                }
                if self.key_to_clique.get(&k) != Some(&id) {
                    return Err(format!("index for {k} does not point at clique {id}"));
                }
            }
            match c.parent {
                None => {
                    if !c.separator.is_empty() {
                        return Err(format!("root clique {id} has a separator"));
                    }
                    if !self.roots.contains(&id) {
                        return Err(format!("clique {id} has no parent but is not a root"));
                    }
                }
                Some(p) => {
                    let parent = self.clique(p).ok_or_else(|| format!("clique {id} has dangling parent {p}"))?;
                    if !parent.children.contains(&id) {
                        return Err(format!("parent {p} does not list child {id}"));
                    }
                    let scope: BTreeSet<Key> = parent.frontals().chain(parent.separator.iter().copied()).collect();
                    if let Some(k) = c.separator.iter().find(|k| !scope.contains(k)) {
                        return Err(format!("separator key {k} of clique {id} is not in parent {p}"));
                    }
                }
            }
            // ancestors must hold every separator key as a frontal
            for k in &c.separator {
                let mut anc = c.parent;
                let mut found = false;
                while let Some(a) = anc {
                    let cl = self.clique(a).expect("ancestor exists");
                    if cl.frontals().any(|f| f == *k) {
                        found = true;
                        break;
                    }
                    anc = cl.parent;
                }
                if !found {
                    return Err(format!("separator key {k} of clique {id} is not frontal in any ancestor"));
                }
            }
        }
        if seen.len() != self.key_to_clique.len() {
            return Err("key index holds keys that are in no clique".into());
        }
        Ok(())
    }

    /// Graphviz rendering; clique labels read `frontals | separator`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph BayesTree {\n  node [shape=box];\n");
        for c in self.top_down() {
            let clique = self.clique(c).expect("listed clique exists");
            let mut frontals: Vec<String> = clique.frontals().map(|k| k.to_string()).collect();
            frontals.reverse();
            let sep: Vec<String> = clique.separator.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "  c{c} [label=\"{} | {}\"];", frontals.join(","), sep.join(","));
            if let Some(p) = clique.parent {
                let _ = writeln!(out, "  c{p} -> c{c};");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn positions(order: &[Key]) -> HashMap<Key, usize> {
    order.iter().enumerate().map(|(i, k)| (*k, i)).collect()
}

/// Eliminates whitened linear factors in `order`.
pub fn eliminate(factors: &[JacobianFactor], order: &Ordering) -> Result<BayesTree> {
    BayesTree::eliminate(factors.iter().map(HessianFactor::from_jacobian).collect(), order)
}

/// Dense reference assembly of the normal equations `(AᵀA, Aᵀb)` over `keys`.
pub fn dense_normal_equations(factors: &[JacobianFactor], keys: &[Key]) -> (DMatrix<f64>, DVector<f64>) {
    let mut offsets = HashMap::new();
    let mut n = 0;
    for k in keys {
        offsets.insert(*k, n);
        n += k.dim();
    }
    let mut info = DMatrix::zeros(n, n);
    let mut eta = DVector::zeros(n);
    for f in factors {
        let h = HessianFactor::from_jacobian(f);
        let mut local = 0;
        let locals: Vec<(usize, usize, usize)> = h
            .keys()
            .iter()
            .map(|k| {
                let o = local;
                local += k.dim();
                (offsets[k], o, k.dim())
            })
            .collect();
        for &(gi, li, di) in &locals {
            let mut seg = eta.rows_mut(gi, di);
            seg += h.eta.rows(li, di);
            for &(gj, lj, dj) in &locals {
                let mut blk = info.view_mut((gi, gj), (di, dj));
                blk += h.info.view((li, lj), (di, dj));
            }
        }
    }
    (info, eta)
}
