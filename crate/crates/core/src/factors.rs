//! Residuals, noise models and linearization for every factor type used by
//! the hybrid and world-centric formulations.
//!
//! Perturbations are right-multiplicative on SE(3) (`x·exp(δ)`) and additive
//! on points. Linearized factors are whitened: `‖A·δ − b‖²` approximates the
//! factor's squared Mahalanobis residual, with `b = −Σ^{-1/2}·r`.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    body_frame_motion, hat, recover_object_pose, reverse_motion, se3_right_jacobian_inv, Motion, Point3, Pose, Twist,
};
use crate::graph::{Key, KeyKind, Values, Variable};

/// Huber loss on the whitened residual norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Huber {
    pub threshold: f64,
}

impl Huber {
    fn weight(&self, norm: f64) -> f64 {
        if norm <= self.threshold {
            1.0
        } else {
            self.threshold / norm
        }
    }

    fn loss(&self, norm: f64) -> f64 {
        if norm <= self.threshold {
            0.5 * norm * norm
        } else {
            self.threshold * (norm - 0.5 * self.threshold)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Whitening {
    Sigmas(Vec<f64>),
    /// Upper-triangular `W` with `WᵀW = Σ⁻¹`.
    SqrtInformation(DMatrix<f64>),
}

/// Gaussian noise model with an optional robust kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    whitening: Whitening,
    robust: Option<Huber>,
}

impl NoiseModel {
    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self> {
        Self::diagonal(&vec![sigma; dim])
    }

    pub fn diagonal(sigmas: &[f64]) -> Result<Self> {
        if sigmas.is_empty() || sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidConfig(format!("noise sigmas must be positive, got {sigmas:?}")));
        }
        Ok(NoiseModel { whitening: Whitening::Sigmas(sigmas.to_vec()), robust: None })
    }

    /// Six-dimensional model with separate rotation and translation sigmas.
    pub fn pose(sigma_rot: f64, sigma_trans: f64) -> Result<Self> {
        Self::diagonal(&[sigma_rot, sigma_rot, sigma_rot, sigma_trans, sigma_trans, sigma_trans])
    }

    pub fn from_covariance(cov: &DMatrix<f64>) -> Result<Self> {
        let info = cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("covariance is singular".into()))?;
        let info = (&info + info.transpose()) * 0.5;
        let chol = info
            .cholesky()
            .ok_or_else(|| Error::InvalidConfig("covariance is not positive definite".into()))?;
        Ok(NoiseModel { whitening: Whitening::SqrtInformation(chol.l().transpose()), robust: None })
    }

    pub fn with_huber(mut self, threshold: f64) -> Self {
        self.robust = Some(Huber { threshold });
        self
    }

    pub fn dim(&self) -> usize {
        match &self.whitening {
            Whitening::Sigmas(s) => s.len(),
            Whitening::SqrtInformation(w) => w.nrows(),
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.whitening {
            Whitening::Sigmas(s) => DMatrix::from_diagonal(&DVector::from_iterator(s.len(), s.iter().map(|v| v * v))),
            Whitening::SqrtInformation(w) => {
                let info = w.transpose() * w;
                info.try_inverse().expect("information matrix is invertible by construction")
            }
        }
    }

    pub fn whiten(&self, r: &DVector<f64>) -> DVector<f64> {
        match &self.whitening {
            Whitening::Sigmas(s) => DVector::from_iterator(r.len(), r.iter().zip(s).map(|(v, s)| v / s)),
            Whitening::SqrtInformation(w) => w * r,
        }
    }

    pub fn whiten_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.whitening {
            Whitening::Sigmas(s) => {
                let mut out = a.clone();
                for (i, s) in s.iter().enumerate() {
                    out.row_mut(i).scale_mut(1.0 / s);
                }
                out
            }
            Whitening::SqrtInformation(w) => w * a,
        }
    }

    /// Contribution to the total cost for an unwhitened residual.
    pub fn cost(&self, r: &DVector<f64>) -> f64 {
        let e = self.whiten(r).norm();
        match &self.robust {
            Some(h) => h.loss(e),
            None => 0.5 * e * e,
        }
    }
}

/// Default sigmas used by the formulation builders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorSigmas {
    /// Point measurement sigma (m). Zero selects `point_floor`.
    pub point: f64,
    pub point_floor: f64,
    pub smoothing_rot: f64,
    pub smoothing_trans: f64,
    pub odometry_rot: f64,
    pub odometry_trans: f64,
    pub prior_rot: f64,
    pub prior_trans: f64,
    /// World-centric point-to-point motion constraint (m).
    pub baseline_motion: f64,
    pub huber: Option<f64>,
}

impl Default for FactorSigmas {
    fn default() -> Self {
        FactorSigmas {
            point: 0.0,
            point_floor: 0.01,
            smoothing_rot: 0.01,
            smoothing_trans: 0.05,
            odometry_rot: 0.001,
            odometry_trans: 0.01,
            prior_rot: 1e-4,
            prior_trans: 1e-4,
            baseline_motion: 0.001,
            huber: None,
        }
    }
}

impl FactorSigmas {
    pub fn point_sigma(&self) -> f64 {
        if self.point > 0.0 {
            self.point
        } else {
            self.point_floor
        }
    }

    fn robustify(&self, n: NoiseModel) -> NoiseModel {
        match self.huber {
            Some(k) => n.with_huber(k),
            None => n,
        }
    }

    pub fn point_noise(&self) -> NoiseModel {
        self.robustify(NoiseModel::isotropic(3, self.point_sigma()).expect("positive point sigma"))
    }

    pub fn smoothing_noise(&self) -> NoiseModel {
        NoiseModel::pose(self.smoothing_rot, self.smoothing_trans).expect("positive smoothing sigmas")
    }

    pub fn odometry_noise(&self) -> NoiseModel {
        NoiseModel::pose(self.odometry_rot, self.odometry_trans).expect("positive odometry sigmas")
    }

    pub fn prior_noise(&self) -> NoiseModel {
        NoiseModel::pose(self.prior_rot, self.prior_trans).expect("positive prior sigmas")
    }

    pub fn baseline_motion_noise(&self) -> NoiseModel {
        self.robustify(NoiseModel::isotropic(3, self.baseline_motion).expect("positive motion sigma"))
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.point_floor,
            self.smoothing_rot,
            self.smoothing_trans,
            self.odometry_rot,
            self.odometry_trans,
            self.prior_rot,
            self.prior_trans,
            self.baseline_motion,
        ];
        if self.point < 0.0 || all.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidConfig(format!("factor sigmas must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Residual type and the constants it closes over.
#[derive(Clone, Debug, PartialEq)]
pub enum FactorKind {
    /// `log(mean⁻¹·X)` over `[X]`.
    PosePrior { mean: Pose },
    /// `log(odom⁻¹·Xa⁻¹·Xb)` over `[Xa, Xb]`.
    Between { measured: Motion },
    /// `z − X⁻¹·m` over `[X, m]`; also the world-centric dynamic observation.
    PointObservation { measured: Point3 },
    /// `z − X⁻¹·H·L_e·m` over `[X, H, m]`, or `[X, m]` with `H = I` at the embedded frame.
    HybridMotion { embedded: Pose, measured: Point3, motion_is_identity: bool },
    /// Body-frame constant-motion residual over `[H_{k-2}, H_{k-1}, H_k]`; the
    /// first motion is dropped from the keys when it is the identity.
    ObjectSmoothing { embedded: Pose, first_is_identity: bool },
    /// `m_k − H·m_{k-1}` over `[m_{k-1}, m_k, H]`.
    BaselineMotion,
    /// `log(H_{k-1}⁻¹·H_k)` over `[H_{k-1}, H_k]`.
    BaselineSmoothing,
    /// `m − mean` over `[m]`.
    PointPrior { mean: Point3 },
    /// `(m_b − m_a) − d` over `[m_a, m_b]`.
    PointBetween { measured: Vector3<f64> },
}

impl FactorKind {
    pub fn label(&self) -> &'static str {
        match self {
            FactorKind::PosePrior { .. } => "prior",
            FactorKind::Between { .. } => "odometry",
            FactorKind::PointObservation { .. } => "point_obs",
            FactorKind::HybridMotion { .. } => "hybrid_motion",
            FactorKind::ObjectSmoothing { .. } => "object_smoothing",
            FactorKind::BaselineMotion => "baseline_motion",
            FactorKind::BaselineSmoothing => "baseline_smoothing",
            FactorKind::PointPrior { .. } => "point_prior",
            FactorKind::PointBetween { .. } => "point_between",
        }
    }

    fn residual_dim(&self) -> usize {
        match self {
            FactorKind::PosePrior { .. }
            | FactorKind::Between { .. }
            | FactorKind::ObjectSmoothing { .. }
            | FactorKind::BaselineSmoothing => 6,
            _ => 3,
        }
    }

    fn expected_dims(&self) -> Vec<usize> {
        match self {
            FactorKind::PosePrior { .. } => vec![6],
            FactorKind::Between { .. } => vec![6, 6],
            FactorKind::PointObservation { .. } => vec![6, 3],
            FactorKind::HybridMotion { motion_is_identity: true, .. } => vec![6, 3],
            FactorKind::HybridMotion { .. } => vec![6, 6, 3],
            FactorKind::ObjectSmoothing { first_is_identity: true, .. } => vec![6, 6],
            FactorKind::ObjectSmoothing { .. } => vec![6, 6, 6],
            FactorKind::BaselineMotion => vec![3, 3, 6],
            FactorKind::BaselineSmoothing => vec![6, 6],
            FactorKind::PointPrior { .. } => vec![3],
            FactorKind::PointBetween { .. } => vec![3, 3],
        }
    }
}

/// Nonlinear factor: residual kind, ordered keys and noise model.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    kind: FactorKind,
    keys: Vec<Key>,
    noise: NoiseModel,
}

impl Factor {
    pub fn new(kind: FactorKind, keys: Vec<Key>, noise: NoiseModel) -> Result<Self> {
        let dims = kind.expected_dims();
        if dims.len() != keys.len() || dims.iter().zip(&keys).any(|(d, k)| *d != k.dim()) {
            return Err(Error::InvalidConfig(format!("{} factor cannot take keys {keys:?}", kind.label())));
        }
        if noise.dim() != kind.residual_dim() {
            return Err(Error::InvalidConfig(format!(
                "{} factor needs a {}-dim noise model, got {}",
                kind.label(),
                kind.residual_dim(),
                noise.dim()
            )));
        }
        let pose_keys_ok = match &kind {
            FactorKind::PosePrior { .. } | FactorKind::Between { .. } => {
                keys.iter().all(|k| k.kind == KeyKind::CameraPose)
            }
            FactorKind::PointObservation { .. } | FactorKind::HybridMotion { .. } => keys[0].kind == KeyKind::CameraPose,
            _ => true,
        };
        if !pose_keys_ok {
            return Err(Error::InvalidConfig(format!("{} factor needs camera pose keys, got {keys:?}", kind.label())));
        }
        Ok(Factor { kind, keys, noise })
    }

    pub fn pose_prior(key: Key, mean: Pose, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::PosePrior { mean }, vec![key], noise)
    }

    pub fn between(a: Key, b: Key, measured: Motion, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::Between { measured }, vec![a, b], noise)
    }

    pub fn point_observation(camera: Key, point: Key, measured: Point3, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::PointObservation { measured }, vec![camera, point], noise)
    }

    /// Hybrid motion factor; `motion = None` stands for the identity motion at the embedded frame.
    pub fn hybrid_motion(
        camera: Key,
        motion: Option<Key>,
        point: Key,
        embedded: Pose,
        measured: Point3,
        noise: NoiseModel,
    ) -> Result<Self> {
        let keys = match motion {
            Some(h) => vec![camera, h, point],
            None => vec![camera, point],
        };
        Self::new(FactorKind::HybridMotion { embedded, measured, motion_is_identity: motion.is_none() }, keys, noise)
    }

    /// Ternary smoothing factor; `first = None` stands for the identity motion at the embedded frame.
    pub fn object_smoothing(first: Option<Key>, second: Key, third: Key, embedded: Pose, noise: NoiseModel) -> Result<Self> {
        let keys = match first {
            Some(a) => vec![a, second, third],
            None => vec![second, third],
        };
        Self::new(FactorKind::ObjectSmoothing { embedded, first_is_identity: first.is_none() }, keys, noise)
    }

    pub fn baseline_motion(prev: Key, curr: Key, motion: Key, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::BaselineMotion, vec![prev, curr, motion], noise)
    }

    pub fn baseline_smoothing(prev: Key, curr: Key, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::BaselineSmoothing, vec![prev, curr], noise)
    }

    pub fn point_prior(key: Key, mean: Point3, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::PointPrior { mean }, vec![key], noise)
    }

    pub fn point_between(a: Key, b: Key, measured: Vector3<f64>, noise: NoiseModel) -> Result<Self> {
        Self::new(FactorKind::PointBetween { measured }, vec![a, b], noise)
    }

    /// True when the residual is affine in the tangent coordinates, so the
    /// linearization does not depend on the linearization point.
    pub fn is_linear(&self) -> bool {
        self.noise.robust.is_none() && matches!(self.kind, FactorKind::PointPrior { .. } | FactorKind::PointBetween { .. })
    }

    pub fn kind(&self) -> &FactorKind {
        &self.kind
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.kind.residual_dim()
    }

    /// Unwhitened residual at `values`.
    pub fn residual(&self, values: &Values) -> Result<DVector<f64>> {
        let vars = self.gather(values)?;
        Ok(self.residual_at(&vars))
    }

    pub fn cost(&self, values: &Values) -> Result<f64> {
        Ok(self.noise.cost(&self.residual(values)?))
    }

    fn gather(&self, values: &Values) -> Result<Vec<Variable>> {
        self.keys
            .iter()
            .map(|k| values.get(k).copied().ok_or(Error::MissingKey(*k)))
            .collect()
    }

    fn residual_at(&self, vars: &[Variable]) -> DVector<f64> {
        let v3 = |v: Vector3<f64>| DVector::from_column_slice(v.as_slice());
        let v6 = |v: Twist| DVector::from_column_slice(v.as_slice());
        match &self.kind {
            FactorKind::PosePrior { mean } => v6(pose_prior_residual(&as_pose(&vars[0]), mean)),
            FactorKind::Between { measured } => v6(between_pose_residual(&as_pose(&vars[0]), &as_pose(&vars[1]), measured)),
            FactorKind::PointObservation { measured } => {
                v3(static_point_residual(&as_pose(&vars[0]), &as_point(&vars[1]), measured))
            }
            FactorKind::HybridMotion { embedded, measured, motion_is_identity } => {
                let (h, m) = if *motion_is_identity {
                    (Motion::identity(), as_point(&vars[1]))
                } else {
                    (as_motion(&vars[1]), as_point(&vars[2]))
                };
                v3(hybrid_motion_residual(&as_pose(&vars[0]), &h, &m, embedded, measured))
            }
            FactorKind::ObjectSmoothing { embedded, first_is_identity } => {
                let (a, b, c) = if *first_is_identity {
                    (Motion::identity(), as_motion(&vars[0]), as_motion(&vars[1]))
                } else {
                    (as_motion(&vars[0]), as_motion(&vars[1]), as_motion(&vars[2]))
                };
                v6(object_smoothing_residual(&a, &b, &c, embedded))
            }
            FactorKind::BaselineMotion => {
                v3(baseline_motion_residual(&as_point(&vars[0]), &as_point(&vars[1]), &as_motion(&vars[2])))
            }
            FactorKind::BaselineSmoothing => v6(baseline_smoothing_residual(&as_motion(&vars[0]), &as_motion(&vars[1]))),
            FactorKind::PointPrior { mean } => v3(as_point(&vars[0]) - mean),
            FactorKind::PointBetween { measured } => v3(as_point(&vars[1]) - as_point(&vars[0]) - measured),
        }
    }

    /// Residual and unwhitened Jacobians, one block per key.
    pub fn jacobians(&self, values: &Values) -> Result<(DVector<f64>, Vec<DMatrix<f64>>)> {
        let vars = self.gather(values)?;
        let r = self.residual_at(&vars);
        let blocks = match &self.kind {
            FactorKind::PosePrior { .. } => {
                vec![dyn6(&se3_right_jacobian_inv(&twist_of(&r)))]
            }
            FactorKind::Between { measured } => {
                let z = as_pose(&vars[0]).between(&as_pose(&vars[1]));
                let _ = measured;
                let jinv = se3_right_jacobian_inv(&twist_of(&r));
                vec![dyn6(&(-jinv * z.inverse().adjoint())), dyn6(&jinv)]
            }
            FactorKind::PointObservation { .. } => {
                let x = as_pose(&vars[0]);
                let pc = x.inverse().transform_point(&as_point(&vars[1]));
                vec![camera_block(&pc), dyn3(&(-x.rotation_matrix().transpose()))]
            }
            FactorKind::HybridMotion { embedded, motion_is_identity, .. } => {
                let x = as_pose(&vars[0]);
                let (h, m) = if *motion_is_identity {
                    (Motion::identity(), as_point(&vars[1]))
                } else {
                    (as_motion(&vars[1]), as_point(&vars[2]))
                };
                let q = embedded.transform_point(&m);
                let pc = x.inverse().transform_point(&h.transform_point(&q));
                let rxt_rh = x.rotation_matrix().transpose() * h.rotation_matrix();
                let j_point = -rxt_rh * embedded.rotation_matrix();
                let mut blocks = vec![camera_block(&pc)];
                if !*motion_is_identity {
                    let mut jh = SMatrix::<f64, 3, 6>::zeros();
                    jh.fixed_view_mut::<3, 3>(0, 0).copy_from(&(rxt_rh * hat(&q)));
                    jh.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-rxt_rh));
                    blocks.push(DMatrix::from_column_slice(3, 6, jh.as_slice()));
                }
                blocks.push(dyn3(&j_point));
                blocks
            }
            FactorKind::ObjectSmoothing { .. } => self.numeric_jacobians(&vars),
            FactorKind::BaselineMotion => {
                let h = as_motion(&vars[2]);
                let rh = *h.rotation_matrix();
                let mut jh = SMatrix::<f64, 3, 6>::zeros();
                jh.fixed_view_mut::<3, 3>(0, 0).copy_from(&(rh * hat(&as_point(&vars[0]))));
                jh.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-rh));
                vec![dyn3(&(-rh)), dyn3(&Matrix3::identity()), DMatrix::from_column_slice(3, 6, jh.as_slice())]
            }
            FactorKind::BaselineSmoothing => {
                let e = as_motion(&vars[0]).between(&as_motion(&vars[1]));
                let jinv = se3_right_jacobian_inv(&twist_of(&r));
                vec![dyn6(&(-jinv * e.inverse().adjoint())), dyn6(&jinv)]
            }
            FactorKind::PointPrior { .. } => vec![dyn3(&Matrix3::identity())],
            FactorKind::PointBetween { .. } => vec![dyn3(&-Matrix3::identity()), dyn3(&Matrix3::identity())],
        };
        Ok((r, blocks))
    }

    /// Central differences with step 1e-6 in each tangent direction.
    fn numeric_jacobians(&self, vars: &[Variable]) -> Vec<DMatrix<f64>> {
        const STEP: f64 = 1e-6;
        let rows = self.dim();
        let mut out = Vec::with_capacity(vars.len());
        let mut scratch = vars.to_vec();
        for i in 0..vars.len() {
            let dim = vars[i].dim();
            let mut block = DMatrix::zeros(rows, dim);
            for j in 0..dim {
                let mut d = vec![0.0; dim];
                d[j] = STEP;
                scratch[i] = vars[i].retract(&d);
                let plus = self.residual_at(&scratch);
                d[j] = -STEP;
                scratch[i] = vars[i].retract(&d);
                let minus = self.residual_at(&scratch);
                block.set_column(j, &((plus - minus) / (2.0 * STEP)));
            }
            scratch[i] = vars[i];
            out.push(block);
        }
        out
    }

    /// Whitened Gauss-Newton linearization at `values`.
    pub fn linearize(&self, values: &Values) -> Result<JacobianFactor> {
        let (r, blocks) = self.jacobians(values)?;
        let mut rw = self.noise.whiten(&r);
        let mut blocks: Vec<DMatrix<f64>> = blocks.iter().map(|b| self.noise.whiten_matrix(b)).collect();
        if let Some(h) = &self.noise.robust {
            let w = h.weight(rw.norm()).sqrt();
            rw *= w;
            for b in &mut blocks {
                *b *= w;
            }
        }
        if rw.iter().any(|v| !v.is_finite()) || blocks.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite(format!("{} factor on {:?}", self.kind.label(), self.keys)));
        }
        Ok(JacobianFactor { keys: self.keys.clone(), blocks, b: -rw })
    }
}

/// Linearized, whitened factor `‖Σ_i A_i·δ_i − b‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianFactor {
    pub keys: Vec<Key>,
    pub blocks: Vec<DMatrix<f64>>,
    pub b: DVector<f64>,
}

impl JacobianFactor {
    pub fn rows(&self) -> usize {
        self.b.len()
    }
}

fn as_pose(v: &Variable) -> Pose {
    match v {
        Variable::Pose(p) => *p,
        Variable::Motion(m) => m.reinterpret(),
        Variable::Point(_) => panic!("expected a pose variable"),
    }
}

fn as_motion(v: &Variable) -> Motion {
    match v {
        Variable::Motion(m) => *m,
        Variable::Pose(p) => p.reinterpret(),
        Variable::Point(_) => panic!("expected a motion variable"),
    }
}

fn as_point(v: &Variable) -> Point3 {
    match v {
        Variable::Point(p) => *p,
        _ => panic!("expected a point variable"),
    }
}

fn twist_of(r: &DVector<f64>) -> Twist {
    Twist::from_column_slice(r.as_slice())
}

fn dyn6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

fn dyn3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

/// `∂(z − X⁻¹·p)/∂ξ_X = [−[p_c]× | I]` for a point `p_c` in the camera frame.
fn camera_block(pc: &Point3) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(3, 6);
    j.view_mut((0, 0), (3, 3)).copy_from(&(-hat(pc)));
    j.view_mut((0, 3), (3, 3)).copy_from(&Matrix3::identity());
    j
}

/// `z − X_k⁻¹·H_{e,k}·L_e·m`.
pub fn hybrid_motion_residual(camera: &Pose, motion: &Motion, local: &Point3, embedded: &Pose, measured: &Point3) -> Point3 {
    measured - camera.inverse().transform_point(&crate::geometry::point_to_world(motion, embedded, local))
}

/// Projects a measurement into the embedded object frame using the reversing
/// motion: `L_e⁻¹ · H_{k,e} · X_k · z`.
pub fn init_object_point(camera: &Pose, motion: &Motion, embedded: &Pose, current: &Pose, measured: &Point3) -> Point3 {
    let back = reverse_motion(motion, embedded, current);
    embedded.inverse().transform_point(&back.transform_point(&camera.transform_point(measured)))
}

/// Body-frame constant-motion residual for three cumulative motions of one object.
pub fn object_smoothing_residual(first: &Motion, second: &Motion, third: &Motion, embedded: &Pose) -> Twist {
    let la = recover_object_pose(first, embedded);
    let lb = recover_object_pose(second, embedded);
    let lc = recover_object_pose(third, embedded);
    let prev = body_frame_motion(&la, &lb);
    let curr = body_frame_motion(&lb, &lc);
    prev.between(&curr).log()
}

pub fn static_point_residual(camera: &Pose, world: &Point3, measured: &Point3) -> Point3 {
    measured - camera.inverse().transform_point(world)
}

pub fn between_pose_residual(a: &Pose, b: &Pose, measured: &Motion) -> Twist {
    let rel: Motion = a.between(b).reinterpret();
    measured.between(&rel).log()
}

pub fn pose_prior_residual(x: &Pose, mean: &Pose) -> Twist {
    mean.local(x)
}

pub fn baseline_motion_residual(prev: &Point3, curr: &Point3, motion: &Motion) -> Point3 {
    curr - motion.transform_point(prev)
}

pub fn baseline_smoothing_residual(prev: &Motion, curr: &Motion) -> Twist {
    prev.local(curr)
}
