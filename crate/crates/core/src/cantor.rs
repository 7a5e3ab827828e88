//! Deterministic Cantor-type subsets of `[0,1]` with a prescribed
//! ball-count exponent.
//!
//! At each dyadic level every kept interval splits; both children are
//! kept exactly at the levels where `floor(beta * level)` increments,
//! otherwise only the left child survives. The set of kept level-`l`
//! intervals therefore has size `2^{floor(beta l)}` and is exactly
//! self-similar: a kept interval of side `2^-j` holds
//! `2^{floor(beta l) - floor(beta j)} <= 2 * 2^{beta (l-j)}` kept
//! sub-intervals, which gives the window bound
//! `#(I ∩ [x-r, x+r]) <= 4 (r/delta)^beta` at every dyadic `r`.

use crate::error::{Error, Result};
use crate::params::dyadic_level;

/// A `delta`-separated subset of `[0,1]` of size about `delta^{-beta}`
/// satisfying `#(I ∩ [x-r, x+r]) <= 4 (r/delta)^beta` for all dyadic `r`.
///
/// `beta = 1` returns all multiples of `delta` in `[0,1]` (both endpoints
/// included); smaller `beta` returns the left endpoints of the kept
/// bottom-level intervals.
pub fn cantor_set_1d(beta: f64, delta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::BetaOutOfRange(beta, "(0, 1]"));
    }
    let levels = dyadic_level(delta)?;
    if beta == 1.0 {
        let count = (1.0 / delta) as u64;
        return Ok((0..=count).map(|i| i as f64 * delta).collect());
    }

    let mut kept: Vec<u64> = vec![0];
    let mut doublings = 0u32;
    for level in 1..=levels {
        let target = (beta * level as f64).floor() as u32;
        if target > doublings {
            doublings = target;
            kept = kept.iter().flat_map(|p| [p << 1, (p << 1) | 1]).collect();
        } else {
            for p in kept.iter_mut() {
                *p <<= 1;
            }
        }
    }
    Ok(kept.into_iter().map(|p| p as f64 * delta).collect())
}

/// Member-centered dyadic interval audit used by the tests and the
/// generator pipelines: the largest `count / (r/delta)^beta` over all
/// members and dyadic `r` in `[delta, 1]`.
pub fn cantor_frostman_constant(points: &[f64], beta: f64, delta: f64) -> f64 {
    let levels = dyadic_level(delta).unwrap_or(0);
    let mut worst: f64 = 0.0;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &x in points {
        for t in 0..=levels {
            let r = delta * 2f64.powi(t as i32);
            let lo = sorted.partition_point(|&y| y < x - r - 1e-12);
            let hi = sorted.partition_point(|&y| y <= x + r + 1e-12);
            let count = (hi - lo) as f64;
            worst = worst.max(count / 2f64.powf(beta * t as f64));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_one_is_the_full_grid() {
        let delta = 2f64.powi(-6);
        let pts = cantor_set_1d(1.0, delta).unwrap();
        assert_eq!(pts.len(), 65);
        assert!((pts[1] - delta).abs() < 1e-15);
        assert!((pts[64] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_half_size_and_audit() {
        let delta = 2f64.powi(-8);
        let pts = cantor_set_1d(0.5, delta).unwrap();
        // 2^{floor(0.5 * 8)} = 16 points at the bottom level.
        assert_eq!(pts.len(), 16);
        let c = cantor_frostman_constant(&pts, 0.5, delta);
        assert!(c <= 4.0, "audit constant {c}");
        // delta-separated.
        let mut sorted = pts.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            assert!(w[1] - w[0] >= delta - 1e-15);
        }
    }

    #[test]
    fn tiny_beta_keeps_few_points() {
        let delta = 2f64.powi(-8);
        let pts = cantor_set_1d(0.05, delta).unwrap();
        assert!(pts.len() <= 2, "got {} points", pts.len());
    }

    #[test]
    fn audit_constant_across_betas() {
        let delta = 2f64.powi(-8);
        for beta in [0.25, 0.5, 0.75, 1.0] {
            let pts = cantor_set_1d(beta, delta).unwrap();
            let c = cantor_frostman_constant(&pts, beta, delta);
            assert!(c <= 4.0, "beta {beta}: constant {c}");
        }
    }

    #[test]
    fn per_level_counts_follow_the_exponent() {
        let delta = 2f64.powi(-8);
        let pts = cantor_set_1d(0.5, delta).unwrap();
        for level in 1..=8u32 {
            let side = 2f64.powi(-(level as i32));
            let mut cubes: Vec<u64> = pts.iter().map(|&x| (x / side).floor() as u64).collect();
            cubes.sort_unstable();
            cubes.dedup();
            let expected = 2f64.powf((0.5 * level as f64).floor());
            assert_eq!(cubes.len() as f64, expected, "level {level}");
        }
    }

    #[test]
    fn rejects_non_dyadic_scale() {
        assert!(cantor_set_1d(0.5, 0.3).is_err());
    }
}
