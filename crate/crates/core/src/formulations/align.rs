use nalgebra::{Matrix3, Vector3};

use crate::geometry::{Motion, Point3, Rotation};

/// Least-squares rigid transform `T` with `dst ≈ T·src` (Kabsch). `None` for
/// fewer than three pairs or a degenerate (collinear) configuration.
pub fn align_points(src: &[Point3], dst: &[Point3]) -> Option<Motion> {
    if src.len() != dst.len() || src.len() < 3 {
        return None;
    }
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        cov += (d - cd) * (s - cs).transpose();
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut sv = svd.singular_values;
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(sv[1] > 1e-9 * sv[0].max(1e-12)) {
        return None;
    }
    let mut fix = Matrix3::identity();
    fix[(2, 2)] = (u * v_t).determinant().signum();
    let r = u * fix * v_t;
    let rotation = Rotation::from_matrix_unchecked(r);
    let t = cd - rotation * cs;
    let out = Motion::from_parts(rotation, t);
    out.is_finite().then_some(out)
}
