use std::collections::BTreeMap;

use nalgebra::{DVector, Vector3, Vector6};

use super::key::{Key, KeyKind};
use crate::error::{Error, Result};
use crate::geometry::{Motion, Point3, Pose};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variable {
    Pose(Pose),
    Motion(Motion),
    Point(Point3),
}

impl Variable {
    pub fn dim(&self) -> usize {
        match self {
            Variable::Pose(_) | Variable::Motion(_) => 6,
            Variable::Point(_) => 3,
        }
    }

    fn matches(&self, kind: KeyKind) -> bool {
        matches!(
            (self, kind),
            (Variable::Pose(_), KeyKind::CameraPose)
                | (Variable::Motion(_), KeyKind::ObjectMotion)
                | (Variable::Point(_), KeyKind::ObjectPoint | KeyKind::StaticPoint | KeyKind::DynamicPoint)
        )
    }

    /// `x ⊕ δ`: right-multiplicative on SE(3), additive on points.
    pub fn retract(&self, delta: &[f64]) -> Variable {
        match self {
            Variable::Pose(p) => Variable::Pose(p.retract(&Vector6::from_column_slice(delta))),
            Variable::Motion(m) => Variable::Motion(m.retract(&Vector6::from_column_slice(delta))),
            Variable::Point(p) => Variable::Point(p + Vector3::from_column_slice(delta)),
        }
    }

    /// Tangent vector `δ` with `self ⊕ δ = other`.
    pub fn local(&self, other: &Variable) -> DVector<f64> {
        match (self, other) {
            (Variable::Pose(a), Variable::Pose(b)) => DVector::from_column_slice(a.local(b).as_slice()),
            (Variable::Motion(a), Variable::Motion(b)) => DVector::from_column_slice(a.local(b).as_slice()),
            (Variable::Point(a), Variable::Point(b)) => DVector::from_column_slice((b - a).as_slice()),
            _ => panic!("local() between variables of different types"),
        }
    }
}

/// Assignment of estimates to keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Values {
    map: BTreeMap<Key, Variable>,
}

impl Values {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, key: &Key) -> bool {
        self.map.contains_key(key)
    }

    pub fn insert(&mut self, key: Key, value: Variable) -> Result<()> {
        if !value.matches(key.kind) {
            return Err(Error::WrongVariableType(key));
        }
        if self.map.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.map.insert(key, value);
        Ok(())
    }

    /// Inserts or overwrites.
    pub fn set(&mut self, key: Key, value: Variable) -> Result<()> {
        if !value.matches(key.kind) {
            return Err(Error::WrongVariableType(key));
        }
        self.map.insert(key, value);
        Ok(())
    }

    pub fn insert_pose(&mut self, key: Key, pose: Pose) -> Result<()> {
        self.insert(key, Variable::Pose(pose))
    }

    pub fn insert_motion(&mut self, key: Key, motion: Motion) -> Result<()> {
        self.insert(key, Variable::Motion(motion))
    }

    pub fn insert_point(&mut self, key: Key, point: Point3) -> Result<()> {
        self.insert(key, Variable::Point(point))
    }

    pub fn get(&self, key: &Key) -> Option<&Variable> {
        self.map.get(key)
    }

    pub fn remove(&mut self, key: &Key) -> Option<Variable> {
        self.map.remove(key)
    }

    pub fn variable(&self, key: &Key) -> Result<&Variable> {
        self.map.get(key).ok_or(Error::MissingKey(*key))
    }

    pub fn pose(&self, key: &Key) -> Result<Pose> {
        match self.variable(key)? {
            Variable::Pose(p) => Ok(*p),
            _ => Err(Error::WrongVariableType(*key)),
        }
    }

    pub fn motion(&self, key: &Key) -> Result<Motion> {
        match self.variable(key)? {
            Variable::Motion(m) => Ok(*m),
            _ => Err(Error::WrongVariableType(*key)),
        }
    }

    pub fn point(&self, key: &Key) -> Result<Point3> {
        match self.variable(key)? {
            Variable::Point(p) => Ok(*p),
            _ => Err(Error::WrongVariableType(*key)),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> + '_ {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &Variable)> + '_ {
        self.map.iter()
    }

    /// Adds all entries of `other`, failing on the first duplicate.
    pub fn extend(&mut self, other: &Values) -> Result<()> {
        for (k, v) in other.iter() {
            self.insert(*k, *v)?;
        }
        Ok(())
    }

    /// Applies `x ⊕ δ` for every key present in `delta`.
    pub fn retract(&self, delta: &BTreeMap<Key, DVector<f64>>) -> Values {
        let mut out = self.clone();
        for (key, d) in delta {
            if let Some(v) = out.map.get_mut(key) {
                *v = v.retract(d.as_slice());
            }
        }
        out
    }

    pub fn total_dim(&self) -> usize {
        self.map.values().map(Variable::dim).sum()
    }
}

impl FromIterator<(Key, Variable)> for Values {
    fn from_iter<T: IntoIterator<Item = (Key, Variable)>>(iter: T) -> Self {
        Values { map: iter.into_iter().collect() }
    }
}
