//! Ball-count spacing audits: `#(family ∩ Q_r) <= M (r/delta)^s` over
//! all dyadic radii `r` in `[delta, 1]`.
//!
//! Balls are centered at family members only: any ball that contains a
//! member is contained in the member-centered ball of twice the radius,
//! so the audit is exhaustive up to a factor `2^s` absorbed into the
//! reported slack.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::{PlaneFamily, SpacingCertificate};
use crate::metric::metric_d_affine_fast;
use crate::params::dyadic_level;

/// The tightest (or violating) ball found by an audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorstBall {
    /// Ball radius.
    pub r: f64,
    /// Index of the member at the center.
    pub center: usize,
    /// Members inside the ball (center included).
    pub count: usize,
    /// The bound `M (r/delta)^s` at this radius.
    pub bound: f64,
}

/// Outcome of a spacing audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingReport {
    pub pass: bool,
    /// Entry maximizing `count / bound`; `None` for an empty family.
    pub worst: Option<WorstBall>,
    pub audited_scales: Vec<f64>,
    /// Exponent and slack the audit ran with.
    pub s: f64,
    pub slack: f64,
}

impl SpacingReport {
    /// Smallest slack `M'` that would make the audit pass.
    pub fn required_slack(&self) -> f64 {
        match &self.worst {
            None => 0.0,
            Some(w) => self.slack * w.count as f64 / w.bound,
        }
    }

    /// Certificate for a passing audit.
    pub fn certificate(&self) -> Option<SpacingCertificate> {
        if self.pass {
            Some(SpacingCertificate {
                s: self.s,
                slack: self.slack,
                audited_scales: self.audited_scales.clone(),
            })
        } else {
            None
        }
    }
}

fn audit_distances<F>(
    len: usize,
    delta: f64,
    s: f64,
    slack: f64,
    distance: F,
) -> Result<SpacingReport>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let levels = dyadic_level(delta)?;
    let scales: Vec<f64> = (0..=levels).map(|t| delta * 2f64.powi(t as i32)).collect();
    if len == 0 {
        return Ok(SpacingReport {
            pass: true,
            worst: None,
            audited_scales: scales,
            s,
            slack,
        });
    }

    let per_center: Vec<WorstBall> = (0..len)
        .into_par_iter()
        .map(|i| {
            let mut dists: Vec<f64> = (0..len).map(|j| distance(i, j)).collect();
            dists.sort_by(f64::total_cmp);
            let mut worst = WorstBall {
                r: scales[0],
                center: i,
                count: 0,
                bound: slack,
            };
            let mut worst_ratio = -1.0f64;
            for (t, &r) in scales.iter().enumerate() {
                let count = dists.partition_point(|&d| d <= r + 1e-12);
                let bound = slack * 2f64.powf(s * t as f64);
                let ratio = count as f64 / bound;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst = WorstBall {
                        r,
                        center: i,
                        count,
                        bound,
                    };
                }
            }
            worst
        })
        .collect();

    // Deterministic reduction: max ratio, ties to the lowest center.
    let worst = per_center
        .into_iter()
        .max_by(|a, b| {
            let ra = a.count as f64 / a.bound;
            let rb = b.count as f64 / b.bound;
            ra.total_cmp(&rb).then(b.center.cmp(&a.center))
        })
        .expect("nonempty");
    let pass = (worst.count as f64) <= worst.bound + 1e-9;
    Ok(SpacingReport {
        pass,
        worst: Some(worst),
        audited_scales: scales,
        s,
        slack,
    })
}

/// Audits a plane family against `count(Q_r) <= M (r/delta)^s` for all
/// dyadic `r` in `[delta, 1]` and all member-centered balls.
pub fn spacing_check(family: &PlaneFamily, s: f64, slack: f64) -> Result<SpacingReport> {
    let planes = &family.planes;
    audit_distances(planes.len(), family.delta, s, slack, |i, j| {
        metric_d_affine_fast(&planes[i], &planes[j])
    })
}

/// Point-set version on `[0,1]^m` with the Euclidean metric; used by the
/// cube partition and by the generators.
pub fn spacing_check_points(
    points: &[DVector<f64>],
    delta: f64,
    s: f64,
    slack: f64,
) -> Result<SpacingReport> {
    audit_distances(points.len(), delta, s, slack, |i, j| {
        (&points[i] - &points[j]).norm()
    })
}
