//! Graph-coordinate chart from affine planes into `[0,1]^m`,
//! `m = (k+1)(n-k)`, so that cube-based machinery applies to plane
//! families.
//!
//! Directions must stay within 1/4 of the reference direction; there the
//! graph matrix has entries below `tan(asin(1/4)) < 0.26` and offsets
//! have norm below 1/2, so the affine shift by 1/2 lands in the open
//! unit cube. The chart is bi-Lipschitz on its domain; the realized
//! distortion on the family is measured and reported.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::family::PlaneFamily;
use crate::metric::{metric_d_affine, metric_d_linear};
use crate::subspace::Subspace;

/// Cap on the direction spread around the reference.
pub const CHART_DIRECTION_CAP: f64 = 0.25;

/// Chart image of a plane family.
#[derive(Debug, Clone)]
pub struct ChartImage {
    /// One point in `[0,1]^m` per input plane, in input order.
    pub points: Vec<DVector<f64>>,
    /// Chart dimension `(k+1)(n-k)`.
    pub m: usize,
    /// Reference direction of the chart.
    pub reference: Subspace,
    /// Largest pairwise ratio between chart gaps and plane distances,
    /// in both directions; 1 means isometric on the family.
    pub distortion: f64,
}

/// Maps a family into `[0,1]^m` through the graph chart at the first
/// plane's direction. Rejects families whose directions stray beyond
/// [`CHART_DIRECTION_CAP`] of the reference.
pub fn map_family_to_unit_cube(family: &PlaneFamily) -> Result<ChartImage> {
    let first = family
        .planes
        .first()
        .ok_or_else(|| Error::InvalidParams("empty family has no chart".into()))?;
    let reference = first.dir().clone();
    let n = reference.n();
    let k = reference.dim();
    let m = (k + 1) * (n - k);
    let b0 = reference.basis().clone();
    let bp = reference.complement().basis().clone();

    let mut points = Vec::with_capacity(family.len());
    for plane in &family.planes {
        let gap = metric_d_linear(plane.dir(), &reference)?;
        if gap > CHART_DIRECTION_CAP {
            return Err(Error::ChartDomainExceeded(gap, CHART_DIRECTION_CAP));
        }
        let b = plane.dir().basis();
        let c = b * b0.transpose();
        let d = b * bp.transpose();
        let graph = c
            .lu()
            .solve(&d)
            .ok_or_else(|| Error::ChartDomainExceeded(1.0, CHART_DIRECTION_CAP))?;
        let w = &bp * plane.offset();
        let mut coords = DVector::zeros(m);
        let mut idx = 0;
        for row in 0..k {
            for col in 0..(n - k) {
                coords[idx] = graph[(row, col)] + 0.5;
                idx += 1;
            }
        }
        for i in 0..(n - k) {
            coords[idx] = w[i] + 0.5;
            idx += 1;
        }
        points.push(coords);
    }

    // Realized distortion over (a deterministic subset of) pairs.
    let len = points.len();
    let mut distortion = 1.0f64;
    let stride = if len <= 500 { 1 } else { len / 500 + 1 };
    for i in (0..len).step_by(stride) {
        for j in ((i + 1)..len).step_by(stride) {
            let plane_gap = metric_d_affine(&family.planes[i], &family.planes[j])?;
            let chart_gap = (&points[i] - &points[j]).norm();
            if plane_gap > 1e-12 && chart_gap > 1e-12 {
                distortion = distortion
                    .max(chart_gap / plane_gap)
                    .max(plane_gap / chart_gap);
            }
        }
    }

    Ok(ChartImage {
        points,
        m,
        reference,
        distortion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::AffinePlane;
    use nalgebra::DVector;

    #[test]
    fn reference_plane_maps_to_the_center() {
        let dir = Subspace::coordinate(3, &[0]);
        let fam = PlaneFamily::new(
            vec![AffinePlane::new(dir, DVector::zeros(3)).unwrap()],
            0.25,
        );
        let img = map_family_to_unit_cube(&fam).unwrap();
        assert_eq!(img.m, 4);
        for c in img.points[0].iter() {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_lines_keep_their_gaps() {
        let dir = Subspace::coordinate(2, &[0]);
        let planes: Vec<AffinePlane> = [0.1, 0.2]
            .iter()
            .map(|&c| AffinePlane::new(dir.clone(), DVector::from_vec(vec![0.0, c])).unwrap())
            .collect();
        let fam = PlaneFamily::new(planes, 0.05);
        let img = map_family_to_unit_cube(&fam).unwrap();
        let chart_gap = (&img.points[0] - &img.points[1]).norm();
        let plane_gap = metric_d_affine(&fam.planes[0], &fam.planes[1]).unwrap();
        assert!(chart_gap / plane_gap <= 4.0 && plane_gap / chart_gap <= 4.0);
        assert!(img.distortion <= 4.0);
    }

    #[test]
    fn rejects_straddling_directions() {
        let planes = vec![
            AffinePlane::new(Subspace::coordinate(2, &[0]), DVector::zeros(2)).unwrap(),
            AffinePlane::new(Subspace::coordinate(2, &[1]), DVector::zeros(2)).unwrap(),
        ];
        let fam = PlaneFamily::new(planes, 0.25);
        assert!(matches!(
            map_family_to_unit_cube(&fam),
            Err(Error::ChartDomainExceeded(_, _))
        ));
    }

    #[test]
    fn image_lands_in_the_unit_cube() {
        let mut planes = Vec::new();
        let dir = Subspace::coordinate(3, &[0]);
        for i in 0..5 {
            let off = DVector::from_vec(vec![0.0, 0.05 * i as f64, -0.03 * i as f64]);
            planes.push(AffinePlane::new(dir.clone(), off).unwrap());
        }
        let fam = PlaneFamily::new(planes, 0.125);
        let img = map_family_to_unit_cube(&fam).unwrap();
        for p in &img.points {
            for c in p.iter() {
                assert!(*c > 0.0 && *c < 1.0);
            }
        }
    }
}
