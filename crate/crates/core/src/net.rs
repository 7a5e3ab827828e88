//! Maximal separated nets on the Grassmannian and on affine planes.
//!
//! Lines in the plane admit an exact angular net. Everywhere else the
//! net is grown by greedy farthest-point insertion over a fine random
//! pool: the result is pairwise `>= delta` separated by construction and
//! covers the pool within `delta` because insertion stops only when no
//! pool point is farther than that.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric::principal_sine_distance;
use crate::subspace::{AffinePlane, Subspace};

/// Hard cap on the candidate pool size.
pub const POOL_GUARD: u128 = 4_000_000;

/// Maximal `delta`-separated set of `k`-subspaces of `R^n`.
///
/// Pairwise distances are `>= delta`; the covering radius over the
/// generating pool is `< delta`. The size is within a fixed factor of
/// `delta^{-k(n-k)}`.
pub fn delta_net_grassmann(k: usize, n: usize, delta: f64, seed: u64) -> Result<Vec<Subspace>> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParams(format!(
            "need 0 < k < n for a direction net, got ({k}, {n})"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "net scale must lie in (0, 1], got {delta}"
        )));
    }
    if k == 1 && n == 2 {
        return Ok(angular_net(delta));
    }

    let dim = (k * (n - k)) as i32;
    let pool_size_f = 200.0 * delta.powi(-dim);
    if pool_size_f > POOL_GUARD as f64 {
        return Err(Error::PoolTooLarge {
            size: pool_size_f as u128,
            limit: POOL_GUARD,
        });
    }
    let pool_size = pool_size_f.ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Subspace> = (0..pool_size)
        .map(|_| Subspace::random(k, n, &mut rng))
        .collect();

    let mut net: Vec<usize> = vec![0];
    let mut min_dist: Vec<f64> = pool
        .iter()
        .map(|s| principal_sine_distance(s, &pool[0]))
        .collect();
    loop {
        let (far_idx, far_dist) = min_dist
            .iter()
            .cloned()
            .enumerate()
            .fold((0usize, -1.0f64), |acc, (i, d)| {
                if d > acc.1 {
                    (i, d)
                } else {
                    acc
                }
            });
        if far_dist < delta {
            break;
        }
        net.push(far_idx);
        for (i, md) in min_dist.iter_mut().enumerate() {
            let d = principal_sine_distance(&pool[i], &pool[far_idx]);
            if d < *md {
                *md = d;
            }
        }
    }
    Ok(net.into_iter().map(|i| pool[i].clone()).collect())
}

/// Exact net for lines in the plane: angles `i * asin(delta)` for
/// `i = 0 .. floor(pi / asin(delta))`. Consecutive lines sit at distance
/// exactly `delta` and the wrap-around gap stays `>= asin(delta)`.
fn angular_net(delta: f64) -> Vec<Subspace> {
    let alpha = delta.asin();
    let count = (std::f64::consts::PI / alpha).floor() as usize;
    (0..count)
        .map(|i| {
            let theta = alpha * i as f64;
            Subspace::line(&DVector::from_vec(vec![theta.cos(), theta.sin()]))
                .expect("unit direction")
        })
        .collect()
}

/// Offsets of a half-shifted grid `delta (Z + 1/2)^m` inside the open
/// ball of radius `bound`, expressed in the rows of `perp_basis`.
fn offset_grid(perp_basis: &DMatrix<f64>, delta: f64, bound: f64) -> Vec<DVector<f64>> {
    let m = perp_basis.nrows();
    let n = perp_basis.ncols();
    if m == 0 {
        return vec![DVector::zeros(n)];
    }
    let max_idx = (bound / delta - 0.5).floor() as i64;
    let mut coords = vec![-max_idx - 1; m];
    let mut out = Vec::new();
    loop {
        let mut w = DVector::zeros(n);
        let mut norm_sq = 0.0;
        for (axis, &c) in coords.iter().enumerate() {
            let t = (c as f64 + 0.5) * delta;
            norm_sq += t * t;
            w += perp_basis.row(axis).transpose() * t;
        }
        if norm_sq < bound * bound {
            out.push(w);
        }
        // Odometer over [-max_idx-1, max_idx]^m.
        let mut axis = 0;
        loop {
            if axis == m {
                return out;
            }
            coords[axis] += 1;
            if coords[axis] > max_idx {
                coords[axis] = -max_idx - 1;
                axis += 1;
            } else {
                break;
            }
        }
    }
}

/// Product net on affine k-planes: a direction net times a half-shifted
/// offset grid in each direction's perpendicular space.
///
/// Pairwise affine distances are `>= delta` (same direction: offset gap;
/// different directions: the direction term alone). The covering radius
/// is at most `2 delta` up to the corner cases quantified in the tests.
pub fn delta_net_affine(k: usize, n: usize, delta: f64, seed: u64) -> Result<Vec<AffinePlane>> {
    let dirs = delta_net_grassmann(k, n, delta, seed)?;
    let mut planes = Vec::new();
    for dir in dirs {
        let perp = dir.complement();
        for w in offset_grid(perp.basis(), delta, 0.5) {
            planes.push(AffinePlane::new(dir.clone(), w)?);
        }
    }
    Ok(planes)
}
