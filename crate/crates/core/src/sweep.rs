//! Both sides of the maximal inequality at one scale, and log-log
//! exponent fits across scales.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::PlaneFamily;
use crate::params::Params;
use crate::slab::{lp_norm, rasterize_family, slab_volume, Slab};
use crate::spacing::spacing_check;

/// One evaluation of the inequality
/// `||sum 1_{V_delta}||_p <= C delta^{-k(d-k)/p' - eps} (sum |V_delta|)^{1/p}`
/// with the constant set to 1; the ratio is a diagnostic to track, not a
/// thresholded claim.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KakeyaRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub p: f64,
    pub eps: f64,
    pub delta: f64,
}

/// Evaluates both sides at the family's scale. The family must pass the
/// spacing audit at `(s, m_slack)` from `params`; violations propagate
/// as [`Error::SpacingViolation`].
pub fn kakeya_ratio(family: &PlaneFamily, params: &Params) -> Result<KakeyaRatio> {
    let report = spacing_check(family, params.s, params.m_slack)?;
    if !report.pass {
        let w = report.worst.expect("failing audit has a witness");
        return Err(Error::SpacingViolation {
            r: w.r,
            center: w.center,
            count: w.count,
            bound: w.bound,
        });
    }
    let delta = family.delta;
    if family.is_empty() {
        return Ok(KakeyaRatio {
            lhs: 0.0,
            rhs: 0.0,
            ratio: 0.0,
            p: params.p,
            eps: params.eps,
            delta,
        });
    }
    let field = rasterize_family(&family.planes, delta)?;
    let lhs = lp_norm(&field, params.p)?;
    let volumes: Vec<f64> = family
        .planes
        .par_iter()
        .map(|plane| slab_volume(&Slab::new(plane.clone(), delta).expect("delta in (0,1)")))
        .collect();
    let sum_vol: f64 = volumes.iter().sum();
    let exponent = -((params.k * (params.d - params.k)) as f64) / params.p_prime - params.eps;
    let rhs = delta.powf(exponent) * sum_vol.powf(1.0 / params.p);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(KakeyaRatio {
        lhs,
        rhs,
        ratio,
        p: params.p,
        eps: params.eps,
        delta,
    })
}

/// Least-squares fit of `log(value)` against `log(1/delta)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the fit.
    pub residual: f64,
}

/// Fits a power law `value ~ C (1/delta)^slope` through at least three
/// scales; rejects nonpositive values.
pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: pairs.len(),
        });
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for (i, &(delta, value)) in pairs.iter().enumerate() {
        if !(delta > 0.0) || !(value > 0.0) {
            return Err(Error::NonPositiveValue(i));
        }
        xs.push((1.0 / delta).ln());
        ys.push(value.ln());
    }
    let m = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / m;
    let y_bar = ys.iter().sum::<f64>() / m;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        cov += (x - x_bar) * (y - y_bar);
        var += (x - x_bar) * (x - x_bar);
    }
    if var == 0.0 {
        return Err(Error::InvalidParams(
            "need at least two distinct scales".into(),
        ));
    }
    let slope = cov / var;
    let intercept = y_bar - slope * x_bar;
    let residual = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (y - (slope * x + intercept)).abs())
        .fold(0.0f64, f64::max);
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
    })
}
