//! Dense information-form factors and sequential variable elimination.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::key::Key;
use crate::error::{Error, Result};
use crate::factors::JacobianFactor;

/// Quadratic factor `½δᵀΛδ − ηᵀδ` over a dense block of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianFactor {
    keys: Vec<Key>,
    offsets: Vec<usize>,
    pub(crate) info: DMatrix<f64>,
    pub(crate) eta: DVector<f64>,
}

impl HessianFactor {
    fn layout(keys: &[Key]) -> (Vec<usize>, usize) {
        let mut offsets = Vec::with_capacity(keys.len());
        let mut n = 0;
        for k in keys {
            offsets.push(n);
            n += k.dim();
        }
        (offsets, n)
    }

    pub fn zeros(keys: Vec<Key>) -> Self {
        let (offsets, n) = Self::layout(&keys);
        HessianFactor { keys, offsets, info: DMatrix::zeros(n, n), eta: DVector::zeros(n) }
    }

    pub fn from_jacobian(j: &JacobianFactor) -> Self {
        let mut out = Self::zeros(j.keys.clone());
        let rows = j.rows();
        let n = out.eta.len();
        let mut a = DMatrix::zeros(rows, n);
        for (block, off) in j.blocks.iter().zip(&out.offsets) {
            a.view_mut((0, *off), (rows, block.ncols())).copy_from(block);
        }
        out.info = a.tr_mul(&a);
        out.eta = a.tr_mul(&j.b);
        out
    }

    /// Isotropic damping `λ·I` on a single variable.
    pub fn damping(key: Key, lambda: f64) -> Self {
        let mut out = Self::zeros(vec![key]);
        out.info.fill_diagonal(lambda);
        out
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    fn offset_of(&self, key: &Key) -> Option<usize> {
        self.keys.iter().position(|k| k == key).map(|i| self.offsets[i])
    }

    /// Adds `other` into `self`; every key of `other` must be present in `self`.
    fn accumulate(&mut self, other: &HessianFactor) {
        let map: Vec<usize> = other
            .keys
            .iter()
            .map(|k| self.offset_of(k).expect("accumulated factor keys must be a subset"))
            .collect();
        for (i, ki) in other.keys.iter().enumerate() {
            let (di, si, oi) = (ki.dim(), map[i], other.offsets[i]);
            let mut seg = self.eta.rows_mut(si, di);
            seg += other.eta.rows(oi, di);
            for (j, kj) in other.keys.iter().enumerate() {
                let (dj, sj, oj) = (kj.dim(), map[j], other.offsets[j]);
                let mut blk = self.info.view_mut((si, sj), (di, dj));
                blk += other.info.view((oi, oj), (di, dj));
            }
        }
    }
}

/// Gaussian conditional `R·δ_frontal + S·δ_sep = d` produced by eliminating one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub frontal: Key,
    /// Upper-triangular diagonal block.
    pub r: DMatrix<f64>,
    pub separator: Vec<Key>,
    /// Off-diagonal blocks, one per separator key.
    pub s: Vec<DMatrix<f64>>,
    pub d: DVector<f64>,
}

impl Conditional {
    /// Back-substitutes given separator solutions.
    pub fn solve(&self, sep_values: &[&DVector<f64>]) -> DVector<f64> {
        let mut rhs = self.d.clone();
        for (s, x) in self.s.iter().zip(sep_values) {
            rhs -= s * *x;
        }
        self.r
            .solve_upper_triangular(&rhs)
            .expect("diagonal of an eliminated conditional is nonzero")
    }
}

/// Output of eliminating one variable: its conditional plus the factor it
/// leaves on its separator.
#[derive(Clone, Debug)]
pub struct EliminationStep {
    pub conditional: Conditional,
    pub marginal: HessianFactor,
}

/// Eliminates `order` one variable at a time (partial Cholesky on the
/// information form). `position` gives the elimination rank of every key in
/// `order`; separators are stored in that order.
pub fn eliminate_sequential(factors: Vec<HessianFactor>, order: &[Key]) -> Result<Vec<EliminationStep>> {
    let position: HashMap<Key, usize> = order.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut pool: Vec<Option<HessianFactor>> = Vec::with_capacity(factors.len() + order.len());
    let mut involved: HashMap<Key, Vec<usize>> = HashMap::with_capacity(order.len());
    for f in factors {
        let id = pool.len();
        for k in f.keys() {
            involved.entry(*k).or_default().push(id);
        }
        pool.push(Some(f));
    }

    let mut steps = Vec::with_capacity(order.len());
    for key in order {
        let gathered: Vec<HessianFactor> = involved
            .remove(key)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|id| pool[id].take())
            .collect();
        if gathered.is_empty() {
            return Err(Error::RankDeficient(*key));
        }
        let mut sep: Vec<Key> = gathered.iter().flat_map(|f| f.keys().iter().copied()).filter(|k| k != key).collect();
        sep.sort_by_key(|k| position.get(k).copied().unwrap_or(usize::MAX));
        sep.dedup();
        if let Some(k) = sep.iter().find(|k| !position.contains_key(k)) {
            return Err(Error::UnknownFactorKey(*k));
        }

        let mut all = Vec::with_capacity(sep.len() + 1);
        all.push(*key);
        all.extend(sep.iter().copied());
        let mut combined = HessianFactor::zeros(all);
        for f in &gathered {
            combined.accumulate(f);
        }

        let step = eliminate_front(combined, *key)?;
        let id = pool.len();
        for k in step.marginal.keys() {
            involved.entry(*k).or_default().push(id);
        }
        pool.push(Some(step.marginal.clone()));
        steps.push(step);
    }
    Ok(steps)
}

/// Partial Cholesky of a combined factor whose first key is the frontal.
fn eliminate_front(combined: HessianFactor, key: Key) -> Result<EliminationStep> {
    let df = key.dim();
    let n = combined.dim();
    let ns = n - df;
    let info_ff = combined.info.view((0, 0), (df, df)).into_owned();
    let info_ff = (&info_ff + info_ff.transpose()) * 0.5;
    let chol = info_ff.cholesky().ok_or(Error::RankDeficient(key))?;
    let r = chol.l().transpose();
    // Reject numerically singular pivots.
    let diag_max = r.diagonal().amax();
    let diag_min = r.diagonal().iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    if !(diag_min > 1e-10 * diag_max.max(1.0)) || !diag_min.is_finite() {
        return Err(Error::RankDeficient(key));
    }
    let rt = r.transpose();
    let info_fs = combined.info.view((0, df), (df, ns)).into_owned();
    let s_full = rt
        .solve_lower_triangular(&info_fs)
        .ok_or(Error::RankDeficient(key))?;
    let d = rt
        .solve_lower_triangular(&combined.eta.rows(0, df).into_owned())
        .ok_or(Error::RankDeficient(key))?;

    let sep: Vec<Key> = combined.keys[1..].to_vec();
    let mut marginal = HessianFactor::zeros(sep.clone());
    if ns > 0 {
        marginal.info = combined.info.view((df, df), (ns, ns)) - s_full.tr_mul(&s_full);
        marginal.eta = combined.eta.rows(df, ns) - s_full.tr_mul(&d);
    }
    let mut s = Vec::with_capacity(sep.len());
    let mut col = 0;
    for k in &sep {
        s.push(s_full.columns(col, k.dim()).into_owned());
        col += k.dim();
    }
    Ok(EliminationStep { conditional: Conditional { frontal: key, r, separator: sep, s, d }, marginal })
}
