//! The shared parameter pack `(k, d, n, beta, delta, K, eps, s, p, ...)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Returns true iff `delta` is exactly `2^-L` for some integer `L >= 1`.
pub fn is_dyadic(delta: f64) -> bool {
    if !(delta > 0.0 && delta < 1.0) {
        return false;
    }
    let inv = 1.0 / delta;
    inv.fract() == 0.0 && (inv as u64).is_power_of_two()
}

/// Number of dyadic levels between `delta = 2^-L` and 1, i.e. `L`.
pub fn dyadic_level(delta: f64) -> Result<u32> {
    if !is_dyadic(delta) {
        return Err(Error::NonDyadicDelta(delta));
    }
    Ok((1.0 / delta).log2().round() as u32)
}

/// Lebesgue exponent of the maximal inequality:
/// `p = min{(d-k+b+1)/(d-k+b), (d+b)/(d+b-1/(d-k+2))}`.
///
/// When `d - k + beta = 0` the first ratio is vacuous and treated as
/// `+inf`, so the second branch is taken. The result is always `> 1`.
pub fn compute_p(k: usize, d: usize, beta: f64) -> Result<f64> {
    if k == 0 || k > d {
        return Err(Error::InvalidParams(format!(
            "need 0 < k <= d, got k = {k}, d = {d}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange(beta, "[0, 1]"));
    }
    let a = (d - k) as f64 + beta;
    let first = if a == 0.0 { f64::INFINITY } else { (a + 1.0) / a };
    let j = (d - k + 2) as f64;
    let b = d as f64 + beta;
    let second = b / (b - 1.0 / j);
    Ok(first.min(second))
}

/// Parameter pack shared by all pipelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Params {
    /// Plane dimension.
    pub k: usize,
    /// Target dimension, `k <= d < n`.
    pub d: usize,
    /// Ambient dimension.
    pub n: usize,
    /// Dimension excess in `[0, k+1]`.
    pub beta: f64,
    /// Dyadic scale `2^-L`.
    pub delta: f64,
    /// Broad/narrow scale parameter, `>= 2`.
    pub big_k: usize,
    /// Loss exponent, `>= 0`.
    pub eps: f64,
    /// Spacing exponent; defaults to `(k+1)(d-k) + beta`.
    pub s: f64,
    /// Lebesgue exponent (`> 1`).
    pub p: f64,
    /// Conjugate exponent, `1/p + 1/p' = 1`.
    pub p_prime: f64,
    /// Tuple length `d - k + 2`.
    pub j: usize,
    /// Spacing-slack constant for partitions and gates.
    pub m_slack: f64,
    /// Ambient dimension for the cube partition lemma.
    pub m: usize,
}

impl Params {
    /// Validates `0 < k <= d < n` and a dyadic `delta`, then fills the
    /// derived fields. For `beta > 1` the exponent `p` is computed with
    /// `beta` clamped to 1 (the larger values only enter the generators).
    pub fn new(k: usize, d: usize, n: usize, beta: f64, delta: f64) -> Result<Self> {
        if k == 0 || k > d || d >= n {
            return Err(Error::InvalidParams(format!(
                "need 0 < k <= d < n, got ({k}, {d}, {n})"
            )));
        }
        if !(0.0..=(k as f64 + 1.0)).contains(&beta) {
            return Err(Error::BetaOutOfRange(beta, "[0, k+1]"));
        }
        dyadic_level(delta)?;
        let p = compute_p(k, d, beta.min(1.0))?;
        let s = ((k + 1) * (d - k)) as f64 + beta;
        Ok(Params {
            k,
            d,
            n,
            beta,
            delta,
            big_k: 8,
            eps: 0.05,
            s,
            p,
            p_prime: p / (p - 1.0),
            j: d - k + 2,
            m_slack: 1.0,
            m: (k + 1) * (n - k),
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        dyadic_level(delta)?;
        self.delta = delta;
        Ok(self)
    }

    pub fn with_big_k(mut self, big_k: usize) -> Result<Self> {
        if big_k < 2 {
            return Err(Error::InvalidParams(format!("need K >= 2, got {big_k}")));
        }
        self.big_k = big_k;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if eps < 0.0 {
            return Err(Error::InvalidParams(format!("need eps >= 0, got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn with_slack(mut self, m_slack: f64) -> Result<Self> {
        if m_slack < 1.0 {
            return Err(Error::InvalidParams(format!(
                "need spacing slack >= 1, got {m_slack}"
            )));
        }
        self.m_slack = m_slack;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_for_lines_in_the_plane_bundle() {
        // (k=1, d=2, beta=1): min{3/2, 3/(3 - 1/3)} = 9/8.
        let p = compute_p(1, 2, 1.0).unwrap();
        assert!((p - 1.125).abs() < 1e-15);
    }

    #[test]
    fn p_for_k_equals_d() {
        // (k=1, d=1, beta=1): min{2, 2/(2 - 1/2)} = 4/3.
        let p = compute_p(1, 1, 1.0).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p_degenerate_first_branch() {
        // (k=2, d=2, beta=0): first ratio is 1/0 -> +inf, second is 4/3.
        let p = compute_p(2, 2, 0.0).unwrap();
        assert!((p - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p_rejects_beta_outside_unit_interval() {
        assert!(compute_p(1, 2, 1.5).is_err());
        assert!(compute_p(1, 2, -0.1).is_err());
    }

    #[test]
    fn p_always_exceeds_one() {
        for k in 1..=3usize {
            for d in k..=5 {
                for beta in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let p = compute_p(k, d, beta).unwrap();
                    assert!(p > 1.0, "p = {p} at ({k}, {d}, {beta})");
                }
            }
        }
    }

    #[test]
    fn dyadic_recognition() {
        assert!(is_dyadic(0.5));
        assert!(is_dyadic(2f64.powi(-8)));
        assert!(!is_dyadic(0.3));
        assert!(!is_dyadic(1.0));
        assert_eq!(dyadic_level(2f64.powi(-6)).unwrap(), 6);
    }

    #[test]
    fn params_validate_dimensions() {
        assert!(Params::new(0, 2, 3, 1.0, 0.25).is_err());
        assert!(Params::new(2, 1, 3, 1.0, 0.25).is_err());
        assert!(Params::new(1, 2, 2, 1.0, 0.25).is_err());
        assert!(Params::new(1, 2, 3, 1.0, 0.3).is_err());
        let p = Params::new(1, 2, 3, 1.0, 0.25).unwrap();
        assert_eq!(p.j, 3);
        assert!((p.s - 3.0).abs() < 1e-15);
        assert!((p.p_prime - 9.0).abs() < 1e-12);
    }
}
