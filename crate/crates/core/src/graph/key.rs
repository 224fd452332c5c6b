use std::fmt;

use serde::{Deserialize, Serialize};

/// Variable categories. Ordering of the variants is part of the total order on
/// [`Key`], which makes orderings and tie-breaks deterministic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KeyKind {
    CameraPose,
    ObjectMotion,
    /// Point stored once in an object's embedded frame.
    ObjectPoint,
    StaticPoint,
    /// World-frame dynamic point re-instantiated every frame (world-centric formulation).
    DynamicPoint,
}

impl KeyKind {
    pub fn tangent_dim(self) -> usize {
        match self {
            KeyKind::CameraPose | KeyKind::ObjectMotion => 6,
            _ => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KeyKind::CameraPose => "camera",
            KeyKind::ObjectMotion => "motion",
            KeyKind::ObjectPoint => "object_point",
            KeyKind::StaticPoint => "static_point",
            KeyKind::DynamicPoint => "dynamic_point",
        }
    }
}

/// Typed variable identifier.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Key {
    pub kind: KeyKind,
    pub object_id: u32,
    pub frame: u32,
    pub track_id: u64,
}

impl Key {
    pub fn camera(frame: u32) -> Self {
        Key { kind: KeyKind::CameraPose, object_id: 0, frame, track_id: 0 }
    }

    pub fn motion(object_id: u32, frame: u32) -> Self {
        Key { kind: KeyKind::ObjectMotion, object_id, frame, track_id: 0 }
    }

    pub fn object_point(object_id: u32, track_id: u64) -> Self {
        Key { kind: KeyKind::ObjectPoint, object_id, frame: 0, track_id }
    }

    pub fn static_point(track_id: u64) -> Self {
        Key { kind: KeyKind::StaticPoint, object_id: 0, frame: 0, track_id }
    }

    pub fn dynamic_point(object_id: u32, frame: u32, track_id: u64) -> Self {
        Key { kind: KeyKind::DynamicPoint, object_id, frame, track_id }
    }

    pub fn dim(&self) -> usize {
        self.kind.tangent_dim()
    }

    pub fn is_pose_like(&self) -> bool {
        self.dim() == 6
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            KeyKind::CameraPose => write!(f, "X{}", self.frame),
            KeyKind::ObjectMotion => write!(f, "H{}_{}", self.object_id, self.frame),
            KeyKind::ObjectPoint => write!(f, "m{}_{}", self.object_id, self.track_id),
            KeyKind::StaticPoint => write!(f, "s{}", self.track_id),
            KeyKind::DynamicPoint => write!(f, "d{}_{}_{}", self.object_id, self.frame, self.track_id),
        }
    }
}
