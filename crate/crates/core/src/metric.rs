//! The two metrics on subspaces and affine planes.
//!
//! On the Grassmannian, `d(V1, V2) = ||P_1 - P_2||` (operator norm of the
//! projector difference) and `rho(V1, V2)` is the smallest `r` with
//! `B^n(0,1) ∩ V1 ⊂ N_r(V2)`. For equal dimensions the two agree. On
//! affine planes `d` adds the offset gap, while `rho` is computed exactly
//! by maximizing the distance function over the in-plane ball via the
//! sphere-constrained solver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spheremax::max_affine_norm_on_sphere;
use crate::subspace::{AffinePlane, Subspace};

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Distance between equal-dimensional subspaces through the smallest
/// principal cosine: `sqrt(1 - sigma_min(B1 B2^T)^2)`. Agrees with
/// [`metric_d_linear`] on equal dimensions and avoids the `n x n`
/// decomposition; `k <= 2` runs allocation-free.
pub fn principal_sine_distance(a: &Subspace, b: &Subspace) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    let k = a.dim();
    if k == 0 {
        return 0.0;
    }
    let sigma_min = match k {
        1 => {
            let mut dot = 0.0;
            for i in 0..a.n() {
                dot += a.basis()[(0, i)] * b.basis()[(0, i)];
            }
            dot.abs()
        }
        2 => {
            // Closed-form singular values of the 2x2 cosine matrix.
            let (mut m00, mut m01, mut m10, mut m11) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..a.n() {
                let (a0, a1) = (a.basis()[(0, i)], a.basis()[(1, i)]);
                let (b0, b1) = (b.basis()[(0, i)], b.basis()[(1, i)]);
                m00 += a0 * b0;
                m01 += a0 * b1;
                m10 += a1 * b0;
                m11 += a1 * b1;
            }
            let frob = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
            let det = m00 * m11 - m01 * m10;
            let gap = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
            (0.5 * (frob - gap)).max(0.0).sqrt()
        }
        _ => {
            let prod = a.basis() * b.basis().transpose();
            prod.svd(false, false).singular_values.min()
        }
    };
    let c = sigma_min.clamp(0.0, 1.0);
    (1.0 - c * c).sqrt()
}

/// Fast affine metric for equal `(k, n)` planes: principal-sine
/// direction gap plus the offset gap.
pub fn metric_d_affine_fast(v1: &AffinePlane, v2: &AffinePlane) -> f64 {
    principal_sine_distance(v1.dir(), v2.dir()) + (v1.offset() - v2.offset()).norm()
}

/// `d(V1, V2) = ||P_1 - P_2||` on the Grassmannian.
pub fn metric_d_linear(v1: &Subspace, v2: &Subspace) -> Result<f64> {
    if v1.n() != v2.n() {
        return Err(Error::DimensionMismatch(v1.n(), v2.n()));
    }
    Ok(operator_norm(&(v1.projector() - v2.projector())))
}

/// `rho(V1, V2) = ||(I - P_2) P_1||`: the smallest `r` such that the unit
/// ball of `V1` lies in the `r`-neighborhood of `V2`.
pub fn metric_rho_linear(v1: &Subspace, v2: &Subspace) -> Result<f64> {
    if v1.n() != v2.n() {
        return Err(Error::DimensionMismatch(v1.n(), v2.n()));
    }
    if v1.dim() == 0 {
        return Ok(0.0);
    }
    let n = v1.n();
    let m = (DMatrix::<f64>::identity(n, n) - v2.projector()) * v1.basis().transpose();
    Ok(operator_norm(&m))
}

/// Affine metric `d(V, V') = d(dir V, dir V') + |x_V - x_V'|`.
pub fn metric_d_affine(v1: &AffinePlane, v2: &AffinePlane) -> Result<f64> {
    if v1.n() != v2.n() {
        return Err(Error::DimensionMismatch(v1.n(), v2.n()));
    }
    if v1.k() != v2.k() {
        return Err(Error::DimensionMismatch(v1.k(), v2.k()));
    }
    Ok(metric_d_linear(v1.dir(), v2.dir())? + (v1.offset() - v2.offset()).norm())
}

/// Affine `rho(V1, V2)`: the exact maximum of `dist(., V2)` over
/// `B^n(0,1) ∩ V1`.
///
/// Points of the plane are `x_1 + u` with `u` in the direction and
/// `|u| <= R = sqrt(1 - |x_1|^2)`, so the objective is
/// `|(I - P_2)(B_1^T t + (x_1 - x_2))|`, a convex quadratic maximized on
/// the sphere `|t| = R`.
pub fn metric_rho_affine(v1: &AffinePlane, v2: &AffinePlane) -> Result<f64> {
    if v1.n() != v2.n() {
        return Err(Error::DimensionMismatch(v1.n(), v2.n()));
    }
    let off_sq = v1.offset().norm_squared();
    if off_sq >= 1.0 {
        return Err(Error::EmptyIntersection(off_sq.sqrt()));
    }
    let radius = (1.0 - off_sq).sqrt();
    let n = v1.n();
    let perp = DMatrix::<f64>::identity(n, n) - v2.dir().projector();
    let m = &perp * v1.dir().basis().transpose();
    let c = &perp * (v1.offset() - v2.offset());
    Ok(max_affine_norm_on_sphere(&m, &c, radius).value)
}
