//! The direction dichotomy: cover directions by caps, find significant
//! caps, and either certify a transverse tuple of caps (volumes grow by
//! more than `1/K` per step) or exhibit a `d`-subspace whose plane
//! bundle captures the directions.
//!
//! The two certificates are exactly the two halves of the dichotomy: if
//! the greedy vector construction stalls at step `j`, every unit vector
//! of every cap center lies within `1/K` of the current span, and any
//! `d`-subspace containing that span witnesses the narrow case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bl::BLInstance;
use crate::error::{Error, Result};
use crate::family::PlaneFamily;
use crate::metric::metric_d_linear;
use crate::spheremax::max_affine_norm_on_sphere;
use crate::subspace::{AffinePlane, MetricBall, Subspace};

/// Tolerance used when auditing certificate inequalities.
const AUDIT_TOL: f64 = 1e-9;

/// A cap cover of the directions occurring in a family.
#[derive(Debug, Clone)]
pub struct CapCover {
    pub scale: f64,
    pub caps: Vec<MetricBall<Subspace>>,
    /// Cap index per plane, in family order.
    pub assignments: Vec<usize>,
}

impl CapCover {
    /// Planes per cap.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.caps.len()];
        for &a in &self.assignments {
            counts[a] += 1;
        }
        counts
    }

    pub fn centers(&self) -> Vec<Subspace> {
        self.caps.iter().map(|c| c.center.clone()).collect()
    }
}

/// Greedy cap cover of the family's directions at the given scale; every
/// plane is assigned to the first cap whose center is within the scale,
/// new caps are opened at unassigned directions.
pub fn cover_directions(family: &PlaneFamily, scale: f64) -> Result<CapCover> {
    if !(scale > 0.0 && scale < 1.0) {
        return Err(Error::InvalidParams(format!(
            "cap scale must lie in (0,1), got {scale}"
        )));
    }
    let mut caps: Vec<MetricBall<Subspace>> = Vec::new();
    let mut assignments = Vec::with_capacity(family.len());
    for plane in &family.planes {
        let dir = plane.dir();
        let mut assigned = None;
        for (idx, cap) in caps.iter().enumerate() {
            if metric_d_linear(dir, &cap.center)? <= scale {
                assigned = Some(idx);
                break;
            }
        }
        let idx = match assigned {
            Some(idx) => idx,
            None => {
                caps.push(MetricBall::new(dir.clone(), scale)?);
                caps.len() - 1
            }
        };
        assignments.push(idx);
    }
    Ok(CapCover {
        scale,
        caps,
        assignments,
    })
}

/// Output of the significance/pigeonhole step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificantCaps {
    /// Caps whose count clears the significance threshold.
    pub significant: Vec<usize>,
    /// The separated dyadic count class maximizing class count times
    /// class size.
    pub chosen: Vec<usize>,
}

/// Significance threshold `#family / K^{n^4}` (0 when the denominator
/// overflows), then pigeonholing over dyadic count classes thinned to
/// `100 K^{-n}` separation; both the threshold and the separation can be
/// overridden for desk-scale runs.
pub fn significant_caps(
    cover: &CapCover,
    big_k: usize,
    n: usize,
    threshold_override: Option<f64>,
    separation_override: Option<f64>,
) -> Result<SignificantCaps> {
    let counts = cover.counts();
    let family_count: usize = counts.iter().sum();
    let threshold = threshold_override.unwrap_or_else(|| {
        let log_denom = (n as f64).powi(4) * (big_k as f64).ln();
        if log_denom > 700.0 {
            0.0
        } else {
            family_count as f64 / log_denom.exp()
        }
    });
    let separation =
        separation_override.unwrap_or(100.0 * (big_k as f64).powi(-(n as i32)));

    let significant: Vec<usize> = (0..cover.caps.len())
        .filter(|&i| counts[i] > 0 && counts[i] as f64 >= threshold)
        .collect();

    // Dyadic count classes.
    let class_of = |c: usize| (c as f64).log2().floor() as i32;
    let mut classes: Vec<i32> = significant.iter().map(|&i| class_of(counts[i])).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut best: Option<(f64, i32, Vec<usize>)> = None;
    for class in classes {
        let members: Vec<usize> = significant
            .iter()
            .copied()
            .filter(|&i| class_of(counts[i]) == class)
            .collect();
        // Thin to the required separation, keeping lower cap indices.
        let mut kept: Vec<usize> = Vec::new();
        for &i in &members {
            let mut ok = true;
            for &j in &kept {
                if metric_d_linear(&cover.caps[i].center, &cover.caps[j].center)? < separation {
                    ok = false;
                    break;
                }
            }
            if ok {
                kept.push(i);
            }
        }
        let score = kept.len() as f64 * 2f64.powi(class);
        let better = match &best {
            None => true,
            Some((s, c, _)) => score > *s || (score == *s && class > *c),
        };
        if better {
            best = Some((score, class, kept));
        }
    }
    Ok(SignificantCaps {
        significant,
        chosen: best.map(|(_, _, kept)| kept).unwrap_or_default(),
    })
}

/// A witness for the narrow case.
#[derive(Debug, Clone)]
pub struct NarrowWitness {
    /// The capturing `d`-subspace.
    pub pi: Subspace,
    /// Centers within the threshold of its plane bundle.
    pub captured: Vec<usize>,
    /// Distances `d(U, G(k, pi))` per center, via the projection of `U`
    /// into `pi`.
    pub distances: Vec<f64>,
}

/// Distance from a `k`-subspace to the bundle of `k`-subspaces of `pi`,
/// computed against the orthogonal projection of `U` into `pi` (1.0 when
/// the projection drops rank).
pub fn dist_to_plane_bundle(u: &Subspace, pi: &Subspace) -> f64 {
    let projected = u.basis() * pi.projector();
    let candidate = Subspace::from_spanning_rows(projected, 1e-8);
    if candidate.dim() < u.dim() {
        return 1.0;
    }
    metric_d_linear(u, &candidate).unwrap_or(1.0)
}

fn principal_directions(centers: &[Subspace], exclude: Option<&DMatrix<f64>>) -> Vec<DVector<f64>> {
    let n = centers[0].n();
    let mut mean = DMatrix::<f64>::zeros(n, n);
    for c in centers {
        mean += c.projector();
    }
    mean /= centers.len() as f64;
    if let Some(span_rows) = exclude {
        let span = Subspace::from_spanning_rows(span_rows.clone(), 1e-10);
        let rej = DMatrix::<f64>::identity(n, n) - span.projector();
        mean = &rej * mean * &rej;
    }
    let eig = mean.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect()
}

/// Completes the rows of `span` to a `d`-dimensional subspace, first
/// along the principal directions of the cap centers, then along
/// coordinate axes if the spectrum degenerates.
fn complete_to_dim(span_rows: &DMatrix<f64>, centers: &[Subspace], d: usize) -> Subspace {
    let n = span_rows.ncols();
    let mut current = Subspace::from_spanning_rows(span_rows.clone(), 1e-10);
    if current.dim() >= d {
        return current;
    }
    for v in principal_directions(centers, Some(span_rows)) {
        if current.dim() >= d {
            break;
        }
        let rej = current.reject(&v);
        if rej.norm() > 1e-8 {
            let mut rows = DMatrix::zeros(current.dim() + 1, n);
            rows.view_mut((0, 0), (current.dim(), n))
                .copy_from(current.basis());
            rows.row_mut(current.dim())
                .copy_from(&(rej.clone() / rej.norm()).transpose());
            current = Subspace::from_spanning_rows(rows, 1e-10);
        }
    }
    let mut axis = 0;
    while current.dim() < d && axis < n {
        let mut e = DVector::zeros(n);
        e[axis] = 1.0;
        let rej = current.reject(&e);
        if rej.norm() > 1e-8 {
            let mut rows = DMatrix::zeros(current.dim() + 1, n);
            rows.view_mut((0, 0), (current.dim(), n))
                .copy_from(current.basis());
            rows.row_mut(current.dim())
                .copy_from(&(rej.clone() / rej.norm()).transpose());
            current = Subspace::from_spanning_rows(rows, 1e-10);
        }
        axis += 1;
    }
    current
}

/// Searches for a `d`-subspace whose plane bundle captures at least
/// `min_count` of the cap centers within `threshold`. Candidates are
/// principal-direction spans, pairwise center spans, and spans grown by
/// the greedy vector selection; absence of a witness is a value, not an
/// error.
pub fn narrow_test(
    centers: &[Subspace],
    d: usize,
    threshold: f64,
    min_count: usize,
) -> Option<NarrowWitness> {
    if centers.is_empty() {
        return None;
    }
    let n = centers[0].n();
    let empty = DMatrix::<f64>::zeros(0, n);
    let mut candidates: Vec<Subspace> = vec![complete_to_dim(&empty, centers, d)];
    // Pairwise spans (up to a deterministic budget).
    let budget = 40usize.min(centers.len());
    for i in 0..budget {
        let rows_i = centers[i].basis().clone();
        candidates.push(complete_to_dim(&rows_i, centers, d));
        for j in (i + 1)..budget {
            let mut stacked = DMatrix::zeros(rows_i.nrows() + centers[j].dim(), n);
            stacked
                .view_mut((0, 0), (rows_i.nrows(), n))
                .copy_from(&rows_i);
            stacked
                .view_mut((rows_i.nrows(), 0), (centers[j].dim(), n))
                .copy_from(centers[j].basis());
            // Keep at most d principal rows of the stacked span.
            let svd = stacked.svd(false, true);
            let vt = svd.v_t.expect("svd with v");
            let keep = svd
                .singular_values
                .iter()
                .filter(|sv| **sv > 1e-10)
                .count()
                .min(d);
            let mut rows = DMatrix::zeros(keep, n);
            for r in 0..keep {
                rows.row_mut(r).copy_from(&vt.row(r));
            }
            candidates.push(complete_to_dim(&rows, centers, d));
        }
    }

    let mut best: Option<NarrowWitness> = None;
    for pi in candidates {
        if pi.dim() != d {
            continue;
        }
        let distances: Vec<f64> = centers.iter().map(|u| dist_to_plane_bundle(u, &pi)).collect();
        let captured: Vec<usize> = distances
            .iter()
            .enumerate()
            .filter(|(_, &dist)| dist <= threshold)
            .map(|(i, _)| i)
            .collect();
        if captured.len() >= min_count {
            let better = match &best {
                None => true,
                Some(b) => captured.len() > b.captured.len(),
            };
            if better {
                best = Some(NarrowWitness {
                    pi,
                    captured,
                    distances,
                });
            }
        }
    }
    best
}

/// A certified transverse tuple of caps.
#[derive(Debug, Clone)]
pub struct TransverseTuple {
    /// `d - k + 2` cap indices; the first contributes the starting
    /// orthonormal vectors.
    pub cap_indices: Vec<usize>,
    /// Unit vectors `v_k .. v_{d+1}`; `v_1 .. v_{k-1}` are the leading
    /// basis rows of the first cap.
    pub witnesses: Vec<DVector<f64>>,
    /// `Vol_j` for `j = k .. d+1`.
    pub volumes: Vec<f64>,
}

/// Outcome of the greedy construction: exactly one of the two cases.
#[derive(Debug, Clone)]
pub enum Dichotomy {
    Broad(TransverseTuple),
    Narrow(NarrowWitness),
}

/// Greedy construction of a transverse tuple: starting from the first
/// cap's orthonormal basis, each step takes the cap offering the unit
/// vector farthest from the current span; a step below `1/K` stalls the
/// construction, and any `d`-subspace containing the span then captures
/// every cap center within `1/K` (the narrow witness).
pub fn greedy_transverse_tuple(
    centers: &[Subspace],
    big_k: usize,
    k: usize,
    d: usize,
) -> Result<Dichotomy> {
    if centers.is_empty() {
        return Err(Error::InvalidParams("no cap centers".into()));
    }
    let n = centers[0].n();
    if d >= n || k > d {
        return Err(Error::InvalidParams(format!(
            "need k <= d < n, got ({k}, {d}, {n})"
        )));
    }
    for c in centers {
        if c.dim() != k || c.n() != n {
            return Err(Error::DimensionMismatch(c.dim(), k));
        }
    }
    let inv_k = 1.0 / big_k as f64;

    let mut span_rows = centers[0].basis().clone();
    let mut cap_indices = vec![0usize];
    let mut witnesses: Vec<DVector<f64>> = vec![centers[0]
        .basis()
        .row(k - 1)
        .transpose()
        .into_owned()];
    let mut volumes = vec![1.0f64];
    let mut volume = 1.0f64;

    for step in (k + 1)..=(d + 1) {
        let span = Subspace::from_spanning_rows(span_rows.clone(), 1e-10);
        let rej = DMatrix::<f64>::identity(n, n) - span.projector();
        // Best unit vector per cap: top singular pair of (I - P_S) B^T.
        let mut best: Option<(f64, usize, DVector<f64>)> = None;
        for (idx, cap) in centers.iter().enumerate() {
            let m = &rej * cap.basis().transpose();
            let svd = m.clone().svd(false, true);
            let (mut sigma, mut top) = (0.0, 0usize);
            for (i, sv) in svd.singular_values.iter().enumerate() {
                if *sv > sigma {
                    sigma = *sv;
                    top = i;
                }
            }
            if sigma <= 0.0 {
                continue;
            }
            let vt = svd.v_t.as_ref().expect("svd with v");
            let coeff = vt.row(top).transpose();
            let v = cap.basis().transpose() * coeff;
            let v = &v / v.norm();
            let better = match &best {
                None => true,
                Some((s, _, _)) => sigma > *s + 1e-15,
            };
            if better {
                best = Some((sigma, idx, v));
            }
        }
        let (sigma, idx, v) = best.expect("nonempty centers");
        if sigma <= inv_k {
            // Stalled: every unit vector of every center is within 1/K
            // of the span; complete it to a d-dimensional witness.
            let pi = complete_to_dim(&span_rows, centers, d);
            let distances: Vec<f64> =
                centers.iter().map(|u| dist_to_plane_bundle(u, &pi)).collect();
            let threshold = (1e4 * inv_k).min(1.0);
            let captured: Vec<usize> = distances
                .iter()
                .enumerate()
                .filter(|(_, &dist)| dist <= threshold)
                .map(|(i, _)| i)
                .collect();
            let _ = step;
            return Ok(Dichotomy::Narrow(NarrowWitness {
                pi,
                captured,
                distances,
            }));
        }
        volume *= sigma;
        volumes.push(volume);
        cap_indices.push(idx);
        witnesses.push(v.clone());
        let mut rows = DMatrix::zeros(span_rows.nrows() + 1, n);
        rows.view_mut((0, 0), (span_rows.nrows(), n))
            .copy_from(&span_rows);
        rows.row_mut(span_rows.nrows()).copy_from(&v.transpose());
        span_rows = rows;
    }
    Ok(Dichotomy::Broad(TransverseTuple {
        cap_indices,
        witnesses,
        volumes,
    }))
}

/// Re-audits a tuple: witnesses are unit vectors of their caps and the
/// Gram volumes exceed `K^{-j}` at every step.
pub fn audit_tuple(
    centers: &[Subspace],
    tuple: &TransverseTuple,
    big_k: usize,
    k: usize,
) -> bool {
    let n = centers[0].n();
    let first = &centers[tuple.cap_indices[0]];
    let mut vectors: Vec<DVector<f64>> = (0..k.saturating_sub(1))
        .map(|row| first.basis().row(row).transpose().into_owned())
        .collect();
    vectors.extend(tuple.witnesses.iter().cloned());
    // Unit membership in the assigned caps.
    for (w_idx, v) in tuple.witnesses.iter().enumerate() {
        let cap = &centers[tuple.cap_indices[w_idx.min(tuple.cap_indices.len() - 1)]];
        if (v.norm() - 1.0).abs() > 1e-9 {
            return false;
        }
        if (cap.project(v) - v).norm() > 1e-8 {
            return false;
        }
    }
    // Gram volumes.
    for (vol_idx, &claimed) in tuple.volumes.iter().enumerate() {
        let j = k + vol_idx;
        let mut basis = DMatrix::zeros(j, n);
        for (row, v) in vectors.iter().take(j).enumerate() {
            basis.row_mut(row).copy_from(&v.transpose());
        }
        let gram = &basis * basis.transpose();
        let vol = gram.determinant().max(0.0).sqrt();
        if (vol - claimed).abs() > 1e-6 {
            return false;
        }
        if vol <= (big_k as f64).powi(-(j as i32)) + AUDIT_TOL {
            return false;
        }
    }
    true
}

/// Re-audits a narrow witness: the stall condition
/// `||(I - P_pi) P_U|| <= 1/K` for every center, and the plane-bundle
/// distances within the stated `10^4 / K` neighborhood (capped at 1).
pub fn audit_narrow(centers: &[Subspace], witness: &NarrowWitness, big_k: usize) -> bool {
    let n = centers[0].n();
    let rej = DMatrix::<f64>::identity(n, n) - witness.pi.projector();
    let inv_k = 1.0 / big_k as f64;
    let stated = (1e4 * inv_k).min(1.0);
    for (u, &dist) in centers.iter().zip(witness.distances.iter()) {
        let sigma = (&rej * u.basis().transpose())
            .svd(false, false)
            .singular_values
            .max();
        if sigma > inv_k + AUDIT_TOL {
            return false;
        }
        if dist > stated + AUDIT_TOL {
            return false;
        }
    }
    true
}

/// Builds the projection instance whose data are the complements of the
/// tuple's cap centers.
pub fn tuple_to_bl_instance(
    centers: &[Subspace],
    tuple: &TransverseTuple,
    p: f64,
) -> Result<BLInstance> {
    let dirs: Vec<Subspace> = tuple
        .cap_indices
        .iter()
        .map(|&i| centers[i].clone())
        .collect();
    BLInstance::from_directions(&dirs, p)
}

/// Translation plus `K`-dilation along the short directions of a slab.
#[derive(Debug, Clone)]
pub struct RescalingMap {
    pub tau_center: DVector<f64>,
    /// The `n - k` thin directions of the carrier slab.
    pub short_directions: Subspace,
    pub factor: f64,
}

impl RescalingMap {
    pub fn new(tau_center: DVector<f64>, short_directions: Subspace, factor: f64) -> Result<Self> {
        if factor < 2.0 {
            return Err(Error::InvalidParams(format!(
                "dilation factor must be >= 2, got {factor}"
            )));
        }
        Ok(RescalingMap {
            tau_center,
            short_directions,
            factor,
        })
    }

    fn scale_matrix(&self, factor: f64) -> DMatrix<f64> {
        let n = self.short_directions.n();
        DMatrix::<f64>::identity(n, n)
            + self.short_directions.projector() * (factor - 1.0)
    }

    /// Largest short-direction excursion of the plane over the unit
    /// ball, plus the slab thickness: must stay within `1/K` for the
    /// slab to sit inside the carrier.
    pub fn containment_margin(&self, plane: &AffinePlane, delta: f64) -> Result<f64> {
        let off_sq = plane.offset().norm_squared();
        if off_sq >= 1.0 {
            return Err(Error::EmptyIntersection(off_sq.sqrt()));
        }
        let radius = (1.0 - off_sq).sqrt();
        let p_short = self.short_directions.projector();
        let m = &p_short * plane.dir().basis().transpose();
        let c = &p_short * (plane.offset() - &self.tau_center);
        let reach = max_affine_norm_on_sphere(&m, &c, radius).value + delta;
        Ok(1.0 / self.factor - reach)
    }

    /// Image of a plane: translate by the slab center, dilate by `K`
    /// along the short directions. The slab thickness maps to
    /// `delta * K`; planes not contained in the carrier slab are
    /// rejected.
    pub fn rescale_plane(&self, plane: &AffinePlane, delta: f64) -> Result<AffinePlane> {
        let margin = self.containment_margin(plane, delta)?;
        if margin < -1e-12 {
            return Err(Error::NotContainedInSlab(margin));
        }
        self.map_plane(plane, self.factor)
    }

    /// Inverse map (contract by `K`, translate back).
    pub fn unrescale_plane(&self, plane: &AffinePlane) -> Result<AffinePlane> {
        self.map_plane_back(plane)
    }

    fn map_plane(&self, plane: &AffinePlane, factor: f64) -> Result<AffinePlane> {
        let s = self.scale_matrix(factor);
        let dir_rows = plane.dir().basis() * &s;
        let dir = Subspace::from_spanning_rows(dir_rows, 1e-12);
        let image_point = &s * (plane.offset() - &self.tau_center);
        let offset = dir.reject(&image_point);
        AffinePlane::with_offset_bound(dir, offset, f64::INFINITY)
    }

    fn map_plane_back(&self, plane: &AffinePlane) -> Result<AffinePlane> {
        let s = self.scale_matrix(1.0 / self.factor);
        let dir_rows = plane.dir().basis() * &s;
        let dir = Subspace::from_spanning_rows(dir_rows, 1e-12);
        let image_point = &s * plane.offset() + &self.tau_center;
        let offset = dir.reject(&image_point);
        AffinePlane::with_offset_bound(dir, offset, f64::INFINITY)
    }

    /// Rescales a whole family; the scale becomes `delta * K`.
    pub fn rescale_family(&self, family: &PlaneFamily) -> Result<PlaneFamily> {
        let planes: Vec<AffinePlane> = family
            .planes
            .iter()
            .map(|p| self.rescale_plane(p, family.delta))
            .collect::<Result<_>>()?;
        Ok(PlaneFamily::new(planes, family.delta * self.factor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::metric_d_affine;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(v: &[f64]) -> Subspace {
        Subspace::line(&DVector::from_column_slice(v)).unwrap()
    }

    #[test]
    fn cover_groups_identical_directions() {
        let dir = Subspace::coordinate(3, &[0]);
        let planes: Vec<AffinePlane> = (0..5)
            .map(|i| {
                AffinePlane::new(
                    dir.clone(),
                    DVector::from_vec(vec![0.0, 0.05 * i as f64, 0.0]),
                )
                .unwrap()
            })
            .collect();
        let fam = PlaneFamily::new(planes, 0.125);
        let cover = cover_directions(&fam, 0.25).unwrap();
        assert_eq!(cover.caps.len(), 1);
        assert!(cover.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn cover_is_a_partition_of_the_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let planes: Vec<AffinePlane> = (0..40)
            .map(|_| {
                let dir = Subspace::random(1, 3, &mut rng);
                AffinePlane::new(dir, DVector::zeros(3)).unwrap()
            })
            .collect();
        let fam = PlaneFamily::new(planes, 0.125);
        let cover = cover_directions(&fam, 0.25).unwrap();
        assert_eq!(cover.assignments.len(), fam.len());
        for (plane, &cap) in fam.planes.iter().zip(cover.assignments.iter()) {
            let d = metric_d_linear(plane.dir(), &cover.caps[cap].center).unwrap();
            assert!(d <= 0.25 + 1e-12);
        }
        let empty = cover_directions(&PlaneFamily::new(Vec::new(), 0.125), 0.25).unwrap();
        assert!(empty.caps.is_empty());
    }

    #[test]
    fn plane_direction_net_cover_count() {
        let dirs = crate::net::delta_net_grassmann(1, 2, 0.25, 0).unwrap();
        let planes: Vec<AffinePlane> = dirs
            .iter()
            .map(|d| AffinePlane::new(d.clone(), DVector::zeros(2)).unwrap())
            .collect();
        let fam = PlaneFamily::new(planes, 0.25);
        let cover = cover_directions(&fam, 0.25).unwrap();
        // About 13 quarter-scale caps cover the direction circle.
        assert!(
            (4..=13).contains(&cover.caps.len()),
            "got {} caps",
            cover.caps.len()
        );
    }

    #[test]
    fn significance_keeps_everything_under_a_tiny_threshold() {
        let dirs = crate::net::delta_net_grassmann(1, 3, 0.5, 0).unwrap();
        let planes: Vec<AffinePlane> = dirs
            .iter()
            .map(|d| AffinePlane::new(d.clone(), DVector::zeros(3)).unwrap())
            .collect();
        let fam = PlaneFamily::new(planes, 0.25);
        let cover = cover_directions(&fam, 0.45).unwrap();
        let sig = significant_caps(&cover, 8, 3, None, None).unwrap();
        assert_eq!(sig.significant.len(), cover.caps.len());
    }

    #[test]
    fn giant_cap_survives_the_pigeonhole() {
        // 64 planes in one direction, 5 stray directions.
        let dir = Subspace::coordinate(3, &[0]);
        let mut planes: Vec<AffinePlane> = (0..64)
            .map(|i| {
                AffinePlane::new(
                    dir.clone(),
                    DVector::from_vec(vec![0.0, 0.007 * i as f64, 0.0]),
                )
                .unwrap()
            })
            .collect();
        for v in [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.8, 0.0]] {
            planes.push(AffinePlane::new(line(&v), DVector::zeros(3)).unwrap());
        }
        let fam = PlaneFamily::new(planes, 0.125);
        let cover = cover_directions(&fam, 0.1).unwrap();
        let sig = significant_caps(&cover, 8, 3, None, None).unwrap();
        assert_eq!(sig.chosen, vec![0]);
    }

    #[test]
    fn pigeonhole_maximizes_count_times_size() {
        // One cap with 64 planes against three separated caps with 8.
        let mut planes = Vec::new();
        let big = Subspace::coordinate(3, &[0]);
        for i in 0..64 {
            planes.push(
                AffinePlane::new(
                    big.clone(),
                    DVector::from_vec(vec![0.0, 0.007 * i as f64, 0.0]),
                )
                .unwrap(),
            );
        }
        for v in [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.6, 0.8]] {
            let d = line(&v);
            for i in 0..8 {
                let off = d.reject(&DVector::from_vec(vec![0.04 * i as f64, 0.0, 0.0]));
                planes.push(AffinePlane::new(d.clone(), off).unwrap());
            }
        }
        let fam = PlaneFamily::new(planes, 0.125);
        let cover = cover_directions(&fam, 0.1).unwrap();
        let sig = significant_caps(&cover, 8, 3, None, None).unwrap();
        // Class {64}: score 64; class {8}: three caps, but only the
        // separated survivors count; 64 still wins.
        assert_eq!(sig.chosen, vec![0]);
    }

    #[test]
    fn narrow_test_finds_a_containing_plane() {
        let centers = vec![line(&[1.0, 0.0, 0.0]), line(&[0.6, 0.8, 0.0]), line(&[0.0, 1.0, 0.0])];
        let w = narrow_test(&centers, 2, 0.01, centers.len()).expect("coplanar directions");
        for &d in &w.distances {
            assert!(d <= 0.01, "distance {d}");
        }
        // The xy-plane is the witness.
        let xy = Subspace::coordinate(3, &[0, 1]);
        assert!(metric_d_linear(&w.pi, &xy).unwrap() < 1e-6);
    }

    #[test]
    fn narrow_test_rejects_the_coordinate_obstruction() {
        // No 2-subspace is near all three coordinate axes: any plane
        // through two of them is at distance 1 from the third.
        let centers = vec![line(&[1.0, 0.0, 0.0]), line(&[0.0, 1.0, 0.0]), line(&[0.0, 0.0, 1.0])];
        assert!(narrow_test(&centers, 2, 0.01, 3).is_none());
        // Half capture is still available (two axes span a plane).
        let half = narrow_test(&centers, 2, 0.01, 2).expect("two axes are coplanar");
        assert_eq!(half.captured.len(), 2);
    }

    #[test]
    fn narrow_test_tolerates_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centers: Vec<Subspace> = (0..12)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                let z: f64 = rng.random_range(-0.05..0.05);
                line(&[x, y, z])
            })
            .collect();
        let w = narrow_test(&centers, 2, 0.1, centers.len()).expect("almost coplanar");
        for &d in &w.distances {
            assert!(d <= 0.1);
        }
    }

    #[test]
    fn greedy_on_coordinate_axes_is_broad() {
        let centers = vec![line(&[1.0, 0.0, 0.0]), line(&[0.0, 1.0, 0.0]), line(&[0.0, 0.0, 1.0])];
        match greedy_transverse_tuple(&centers, 10, 1, 2).unwrap() {
            Dichotomy::Broad(tuple) => {
                assert_eq!(tuple.cap_indices.len(), 3);
                for (i, &v) in tuple.volumes.iter().enumerate() {
                    assert!((v - 1.0).abs() < 1e-9, "volume {i} = {v}");
                }
                assert!(audit_tuple(&centers, &tuple, 10, 1));
            }
            Dichotomy::Narrow(_) => panic!("axes are transverse"),
        }
    }

    #[test]
    fn greedy_stalls_on_clustered_directions() {
        let big_k = 10usize;
        let eps = 1.0 / (big_k as f64 * 10.0);
        let centers = vec![
            line(&[1.0, 0.0, 0.0]),
            line(&[1.0, eps, 0.0]),
            line(&[1.0, 0.0, eps]),
            line(&[1.0, -eps, eps]),
        ];
        match greedy_transverse_tuple(&centers, big_k, 1, 2).unwrap() {
            Dichotomy::Narrow(w) => {
                assert!(audit_narrow(&centers, &w, big_k));
                // The witness contains the x-axis.
                assert!(w.pi.contains(&centers[0], 1e-6));
                assert_eq!(w.captured.len(), centers.len());
            }
            Dichotomy::Broad(_) => panic!("clustered directions cannot be transverse"),
        }
    }

    #[test]
    fn dichotomy_certificates_always_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let count = rng.random_range(2..20usize);
            let centers: Vec<Subspace> =
                (0..count).map(|_| Subspace::random(1, 3, &mut rng)).collect();
            match greedy_transverse_tuple(&centers, 8, 1, 2).unwrap() {
                Dichotomy::Broad(t) => {
                    assert!(audit_tuple(&centers, &t, 8, 1), "trial {trial}");
                    let inst = tuple_to_bl_instance(&centers, &t, 1.125).unwrap();
                    assert_eq!(inst.j(), 3);
                }
                Dichotomy::Narrow(w) => {
                    assert!(audit_narrow(&centers, &w, 8), "trial {trial}");
                }
            }
        }
    }

    fn tube_map(n: usize, k: usize, big_k: usize) -> RescalingMap {
        // Short directions: the last n-k axes.
        let axes: Vec<usize> = (k..n).collect();
        RescalingMap::new(
            DVector::zeros(n),
            Subspace::coordinate(n, &axes),
            big_k as f64,
        )
        .unwrap()
    }

    #[test]
    fn axis_plane_is_fixed_by_the_rescaling() {
        let map = tube_map(3, 1, 8);
        let delta = 2f64.powi(-6);
        let x_axis =
            AffinePlane::new(Subspace::coordinate(3, &[0]), DVector::zeros(3)).unwrap();
        let image = map.rescale_plane(&x_axis, delta).unwrap();
        assert!(metric_d_affine(&x_axis, &image).unwrap() < 1e-12);
    }

    #[test]
    fn short_offsets_scale_by_the_factor() {
        let big_k = 8;
        let map = tube_map(3, 1, big_k);
        let delta = 2f64.powi(-6);
        let off = DVector::from_vec(vec![0.0, 0.0, 1.0 / (2.0 * big_k as f64) - 2.0 * delta]);
        let plane =
            AffinePlane::new(Subspace::coordinate(3, &[0]), off.clone()).unwrap();
        let image = map.rescale_plane(&plane, delta).unwrap();
        let expected = off[2] * big_k as f64;
        assert!((image.offset()[2] - expected).abs() < 1e-12);
    }

    #[test]
    fn planes_outside_the_carrier_are_rejected() {
        let map = tube_map(3, 1, 8);
        let delta = 2f64.powi(-6);
        let off = DVector::from_vec(vec![0.0, 0.0, 0.3]);
        let plane = AffinePlane::new(Subspace::coordinate(3, &[0]), off).unwrap();
        assert!(matches!(
            map.rescale_plane(&plane, delta),
            Err(Error::NotContainedInSlab(_))
        ));
    }

    #[test]
    fn rescale_roundtrips_to_the_original() {
        let big_k = 8;
        let map = tube_map(3, 1, big_k);
        let delta = 2f64.powi(-7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            // Directions near the x-axis, offsets inside the tube.
            let tilt_y: f64 = rng.random_range(-0.05..0.05);
            let tilt_z: f64 = rng.random_range(-0.05..0.05);
            let dir = line(&[1.0, tilt_y, tilt_z]);
            let raw = DVector::from_vec(vec![
                0.0,
                rng.random_range(-0.04..0.04),
                rng.random_range(-0.04..0.04),
            ]);
            let off = dir.reject(&raw);
            let plane = AffinePlane::new(dir, off).unwrap();
            if map.containment_margin(&plane, delta).unwrap() < 0.0 {
                continue;
            }
            let image = map.rescale_plane(&plane, delta).unwrap();
            let back = map.unrescale_plane(&image).unwrap();
            assert!(metric_d_affine(&plane, &back).unwrap() < 1e-10);
        }
    }
}
