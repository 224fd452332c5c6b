//! SE(3) arithmetic and the rigid-body motion identities used by the factors.
//!
//! Tangent vectors are ordered `(rotation, translation)` everywhere in this
//! crate. Poses and motions share the same arithmetic but are kept as distinct
//! types: a motion carries a body between two poses and has no meaning as a
//! pose on its own.

use std::fmt;
use std::marker::PhantomData;

use nalgebra::{Matrix3, Matrix4, Matrix6, Rotation3, Vector3, Vector6};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rotation = Rotation3<f64>;
pub type Point3 = Vector3<f64>;
/// Tangent coordinates `(ω, ρ)`: rotation vector first, translation second.
pub type Twist = Vector6<f64>;

/// Marker for transforms interpreted as poses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PoseTag;
/// Marker for transforms interpreted as motions between poses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MotionTag;

/// Rigid transform `x ↦ R·x + t`.
#[derive(Clone, Copy, PartialEq)]
pub struct Transform<K> {
    rotation: Rotation,
    translation: Vector3<f64>,
    _kind: PhantomData<K>,
}

pub type Pose = Transform<PoseTag>;
pub type Motion = Transform<MotionTag>;

const SMALL_ANGLE: f64 = 1e-5;

impl<K> Transform<K> {
    pub fn identity() -> Self {
        Self::from_parts(Rotation::identity(), Vector3::zeros())
    }

    pub fn from_parts(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Transform { rotation, translation, _kind: PhantomData }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::from_parts(Rotation::identity(), translation)
    }

    pub fn from_rotation(rotation: Rotation) -> Self {
        Self::from_parts(rotation, Vector3::zeros())
    }

    /// Rotation about +z by `angle` radians with the given translation.
    pub fn rot_z(angle: f64, translation: Vector3<f64>) -> Self {
        Self::from_parts(Rotation::from_axis_angle(&Vector3::z_axis(), angle), translation)
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_matrix(&self) -> &Matrix3<f64> {
        self.rotation.matrix()
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        compose_mixed(self, other)
    }

    pub fn inverse(&self) -> Self {
        let rinv = self.rotation.inverse();
        Self::from_parts(rinv, -(rinv * self.translation))
    }

    /// `self⁻¹ · other`.
    pub fn between(&self, other: &Self) -> Self {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        self.rotation * p + self.translation
    }

    pub fn exp(xi: &Twist) -> Self {
        let omega = xi.fixed_rows::<3>(0).into_owned();
        let rho = xi.fixed_rows::<3>(3).into_owned();
        let rotation = so3_exp(&omega);
        Self::from_parts(rotation, so3_left_jacobian(&omega) * rho)
    }

    /// Principal logarithm. At a rotation angle of exactly π the rotation
    /// axis is chosen with a non-negative first nonzero component.
    pub fn log(&self) -> Twist {
        let omega = so3_log(&self.rotation);
        let rho = so3_left_jacobian_inv(&omega) * self.translation;
        let mut out = Twist::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&omega);
        out.fixed_rows_mut::<3>(3).copy_from(&rho);
        out
    }

    /// Right-multiplicative update `self · exp(δ)`.
    pub fn retract(&self, delta: &Twist) -> Self {
        self.compose(&Self::exp(delta))
    }

    /// Inverse of [`Transform::retract`]: `log(self⁻¹ · other)`.
    pub fn local(&self, other: &Self) -> Twist {
        self.between(other).log()
    }

    /// Adjoint in `(ω, ρ)` ordering: `T·exp(ξ) = exp(Ad·ξ)·T`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = *self.rotation.matrix();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&(hat(&self.translation) * r));
        ad
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Builds a transform from a homogeneous matrix, re-orthonormalising the
    /// rotation block.
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let t: Vector3<f64> = m.fixed_view::<3, 1>(0, 3).into_owned();
        Self::from_parts(Rotation::from_matrix(&r), t)
    }

    /// Same element with a different interpretation.
    pub fn reinterpret<K2>(&self) -> Transform<K2> {
        Transform::from_parts(self.rotation, self.translation)
    }

    /// Rotation angle of the transform in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        so3_log(&self.rotation).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.translation.iter().all(|v| v.is_finite())
            && self.rotation.matrix().iter().all(|v| v.is_finite())
    }

    /// Largest absolute difference over homogeneous-matrix entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.to_matrix() - other.to_matrix()).amax()
    }
}

impl<K> Default for Transform<K> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<K> std::ops::Mul for Transform<K> {
    type Output = Transform<K>;
    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl<K> std::ops::Mul<&Transform<K>> for &Transform<K> {
    type Output = Transform<K>;
    fn mul(self, rhs: &Transform<K>) -> Transform<K> {
        self.compose(rhs)
    }
}

impl<K> fmt::Debug for Transform<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rotation.scaled_axis();
        let t = &self.translation;
        write!(
            f,
            "Transform(rotvec: [{:.6}, {:.6}, {:.6}], t: [{:.6}, {:.6}, {:.6}])",
            w.x, w.y, w.z, t.x, t.y, t.z
        )
    }
}

/// Serialized form: rotation vector (radians) and translation (meters).
#[derive(Serialize, Deserialize)]
struct TransformRepr {
    #[serde(default)]
    rotation: [f64; 3],
    #[serde(default)]
    translation: [f64; 3],
}

impl<K> Serialize for Transform<K> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let w = so3_log(&self.rotation);
        TransformRepr {
            rotation: [w.x, w.y, w.z],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de, K> Deserialize<'de> for Transform<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = TransformRepr::deserialize(d)?;
        Ok(Self::from_parts(
            so3_exp(&Vector3::from(repr.rotation)),
            Vector3::from(repr.translation),
        ))
    }
}

fn compose_mixed<A, B, C>(a: &Transform<A>, b: &Transform<B>) -> Transform<C> {
    Transform::from_parts(a.rotation * b.rotation, a.rotation * b.translation + a.translation)
}

/// Moves a point stored in the embedded object frame to the world at time k:
/// `H · L_e · p`.
pub fn point_to_world(motion: &Motion, embedded: &Pose, p_local: &Point3) -> Point3 {
    motion.transform_point(&embedded.transform_point(p_local))
}

/// Object pose at time k from its cumulative motion: `H · L_e`.
pub fn recover_object_pose(motion: &Motion, embedded: &Pose) -> Pose {
    compose_mixed(motion, embedded)
}

/// Body-frame motion between two object poses: `L_{k-1}⁻¹ · L_k`.
pub fn body_frame_motion(prev: &Pose, curr: &Pose) -> Motion {
    compose_mixed(&prev.inverse(), curr)
}

/// World motion carrying `from` to `to`: `to · from⁻¹`.
pub fn motion_between_poses(from: &Pose, to: &Pose) -> Motion {
    compose_mixed(to, &from.inverse())
}

/// Reversing motion from k back to the embedded frame,
/// `L_k · (L_e⁻¹ · H · L_e)⁻¹ · L_k⁻¹`, evaluated literally.
///
/// When `L_k = H · L_e` holds this reduces to `H⁻¹`.
pub fn reverse_motion(motion: &Motion, embedded: &Pose, current: &Pose) -> Motion {
    let body: Pose = compose_mixed(&compose_mixed::<_, _, PoseTag>(&embedded.inverse(), motion), embedded);
    let out: Motion = compose_mixed(&compose_mixed::<_, _, PoseTag>(current, &body.inverse()), &current.inverse());
    #[cfg(debug_assertions)]
    {
        let consistent = recover_object_pose(motion, embedded).max_abs_diff(current) < 1e-9;
        if consistent {
            let inverted = motion.inverse();
            debug_assert!(
                out.max_abs_diff(&inverted) < 1e-6,
                "reverse motion {out:?} differs from inverse {inverted:?} for a consistent triple"
            );
        }
    }
    out
}

pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub fn so3_exp(omega: &Vector3<f64>) -> Rotation {
    let theta2 = omega.norm_squared();
    let w = hat(omega);
    let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation::from_matrix_unchecked(Matrix3::identity() + w * a + w * w * b)
}

pub fn so3_log(r: &Rotation) -> Vector3<f64> {
    let m = r.matrix();
    let skew = vee(&(m - m.transpose())) * 0.5; // sin(θ)·axis
    let sin_theta = skew.norm();
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = sin_theta.atan2(cos_theta);
    if theta < SMALL_ANGLE {
        return skew * (1.0 + theta * theta / 6.0);
    }
    if std::f64::consts::PI - theta > 1e-6 {
        return skew * (theta / sin_theta);
    }
    // Near π: recover the axis from the symmetric part, aaᵀ = (sym(R) - cosθ·I) / (1 - cosθ).
    let sym = (m + m.transpose()) * 0.5;
    let outer = (sym - Matrix3::identity() * cos_theta) / (1.0 - cos_theta);
    let i = (0..3)
        .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
        .unwrap_or(0);
    let mut axis: Vector3<f64> = outer.column(i).into_owned() / outer[(i, i)].max(0.0).sqrt();
    axis.normalize_mut();
    let flip = if sin_theta < 1e-12 { !first_nonzero_non_negative(&axis) } else { skew.dot(&axis) < 0.0 };
    if flip {
        axis = -axis;
    }
    axis * theta
}

fn first_nonzero_non_negative(v: &Vector3<f64>) -> bool {
    v.iter().find(|c| c.abs() > 1e-12).map_or(true, |c| *c > 0.0)
}

/// Left Jacobian of SO(3).
pub fn so3_left_jacobian(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let w = hat(omega);
    let (a, b) = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        let theta = theta2.sqrt();
        ((1.0 - theta.cos()) / theta2, (theta - theta.sin()) / (theta2 * theta))
    };
    Matrix3::identity() + w * a + w * w * b
}

pub fn so3_left_jacobian_inv(omega: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let w = hat(omega);
    let c = if theta2 < SMALL_ANGLE * SMALL_ANGLE {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let theta = theta2.sqrt();
        1.0 / theta2 - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    };
    Matrix3::identity() - w * 0.5 + w * w * c
}

/// Coupling block of the SE(3) left Jacobian.
fn se3_q(omega: &Vector3<f64>, rho: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = omega.norm_squared();
    let p = hat(omega);
    let r = hat(rho);
    let (c1, c2, c3) = if theta2 < 1e-6 {
        (1.0 / 6.0 - theta2 / 120.0, 1.0 / 24.0 - theta2 / 720.0, 1.0 / 120.0 - theta2 / 2520.0)
    } else {
        let theta = theta2.sqrt();
        let (s, c) = theta.sin_cos();
        (
            (theta - s) / (theta2 * theta),
            (theta2 + 2.0 * c - 2.0) / (2.0 * theta2 * theta2),
            (2.0 * theta - 3.0 * s + theta * c) / (2.0 * theta2 * theta2 * theta),
        )
    };
    r * 0.5
        + (p * r + r * p + p * r * p) * c1
        + (p * p * r + r * p * p - p * r * p * 3.0) * c2
        + (p * r * p * p + p * p * r * p) * c3
}

/// Left Jacobian of SE(3): `exp(ξ + δ) ≈ exp(J_l(ξ)·δ)·exp(ξ)`.
pub fn se3_left_jacobian(xi: &Twist) -> Matrix6<f64> {
    let omega = xi.fixed_rows::<3>(0).into_owned();
    let rho = xi.fixed_rows::<3>(3).into_owned();
    let j = so3_left_jacobian(&omega);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&j);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&j);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&se3_q(&omega, &rho));
    out
}

pub fn se3_left_jacobian_inv(xi: &Twist) -> Matrix6<f64> {
    let omega = xi.fixed_rows::<3>(0).into_owned();
    let rho = xi.fixed_rows::<3>(3).into_owned();
    let jinv = so3_left_jacobian_inv(&omega);
    let q = se3_q(&omega, &rho);
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&jinv);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-jinv * q * jinv));
    out
}

/// Right Jacobian of SE(3): `exp(ξ + δ) ≈ exp(ξ)·exp(J_r(ξ)·δ)`.
pub fn se3_right_jacobian(xi: &Twist) -> Matrix6<f64> {
    se3_left_jacobian(&(-xi))
}

pub fn se3_right_jacobian_inv(xi: &Twist) -> Matrix6<f64> {
    se3_left_jacobian_inv(&(-xi))
}

/// Twist with the given rotation-vector and translation parts.
pub fn twist(omega: [f64; 3], rho: [f64; 3]) -> Twist {
    Twist::new(omega[0], omega[1], omega[2], rho[0], rho[1], rho[2])
}
