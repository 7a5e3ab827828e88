//! Slabs `V_r = N_r(V) ∩ B^n(0,1)`, their rasterization on the cell
//! grid, `L^p` norms, and grid-counted volumes.
//!
//! Rasterization marches a lattice over the plane's in-ball parameter
//! range, collects candidate cells around each foot point, and applies
//! the exact center-membership test, so a cell is counted if and only if
//! its center passes [`slab_contains`].

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::PlaneFamily;
use crate::grid::{Grid, IncidenceField};
use crate::subspace::AffinePlane;

/// A thickened plane intersected with the unit ball.
#[derive(Debug, Clone)]
pub struct Slab {
    pub plane: AffinePlane,
    pub r: f64,
}

impl Slab {
    pub fn new(plane: AffinePlane, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParams(format!(
                "slab thickness must lie in (0,1), got {r}"
            )));
        }
        Ok(Slab { plane, r })
    }
}

/// True iff `point` lies in the unit ball and within `r` of the plane.
pub fn slab_contains(slab: &Slab, point: &DVector<f64>) -> bool {
    point.norm() <= 1.0 && slab.plane.distance(point) <= slab.r
}

/// Flat basis rows and offset of a plane, for the hot loops.
struct FlatPlane {
    n: usize,
    k: usize,
    basis: Vec<f64>,
    offset: Vec<f64>,
}

impl FlatPlane {
    fn new(plane: &AffinePlane) -> Self {
        let n = plane.n();
        let k = plane.k();
        let mut basis = Vec::with_capacity(k * n);
        for row in 0..k {
            for col in 0..n {
                basis.push(plane.dir().basis()[(row, col)]);
            }
        }
        FlatPlane {
            n,
            k,
            basis,
            offset: plane.offset().iter().copied().collect(),
        }
    }

    /// Squared distance from a point to the plane.
    fn dist_sq(&self, point: &[f64], diff: &mut [f64], coeff: &mut [f64]) -> f64 {
        for i in 0..self.n {
            diff[i] = point[i] - self.offset[i];
        }
        for row in 0..self.k {
            let mut dot = 0.0;
            for col in 0..self.n {
                dot += self.basis[row * self.n + col] * diff[col];
            }
            coeff[row] = dot;
        }
        let mut out = 0.0;
        for col in 0..self.n {
            let mut v = diff[col];
            for row in 0..self.k {
                v -= self.basis[row * self.n + col] * coeff[row];
            }
            out += v * v;
        }
        out
    }
}

/// All cells of `grid` whose centers lie within `r` of the plane and in
/// the unit ball, collected exactly via the marching enumeration.
fn slab_cells(plane: &AffinePlane, r: f64, grid: &Grid) -> Vec<usize> {
    let flat = FlatPlane::new(plane);
    let n = flat.n;
    let k = flat.k;
    let delta = grid.delta();
    let per_axis = grid.per_axis();
    let step = delta / 2.0;
    // A cell center within r of the plane is within cand_r (per axis) of
    // one of the marched foot points.
    let cand_r = r + (k as f64).sqrt() * step / 2.0 + 1e-12;
    // In-ball plane points have |t| <= 1 exactly (offset and thickening
    // are perpendicular to the direction); pad by the lattice mesh.
    let t_keep = 1.0 + (k as f64).sqrt() * step / 2.0 + 1e-9;
    let t_span = 1.5;
    let t_steps = (2.0 * t_span / step).ceil() as i64;

    let mut out = Vec::new();
    let mut diff = vec![0.0; n];
    let mut coeff = vec![0.0; k];
    let mut point = vec![0.0; n];
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    let mut cell = vec![0usize; n];
    let r_sq = r * r;

    let mut t_iter = vec![0i64; k];
    loop {
        // Foot point x + B^T t.
        let mut t_norm_sq = 0.0;
        let mut foot = flat.offset.clone();
        for (row, &ti) in t_iter.iter().enumerate() {
            let tv = -t_span + (ti as f64 + 0.5) * step;
            t_norm_sq += tv * tv;
            for col in 0..n {
                foot[col] += flat.basis[row * n + col] * tv;
            }
        }
        if t_norm_sq <= t_keep * t_keep {
            // Candidate index ranges per axis.
            let mut nonempty = true;
            for axis in 0..n {
                let lo_f = ((foot[axis] - cand_r + 1.0) / delta).floor();
                let hi_f = ((foot[axis] + cand_r + 1.0) / delta).floor();
                if hi_f < 0.0 || lo_f >= per_axis as f64 {
                    nonempty = false;
                    break;
                }
                lo[axis] = lo_f.max(0.0) as usize;
                hi[axis] = (hi_f as usize).min(per_axis - 1);
            }
            if nonempty {
                cell.copy_from_slice(&lo);
                'cells: loop {
                    let mut norm_sq = 0.0;
                    for axis in 0..n {
                        point[axis] = -1.0 + (cell[axis] as f64 + 0.5) * delta;
                        norm_sq += point[axis] * point[axis];
                    }
                    if norm_sq <= 1.0 && flat.dist_sq(&point, &mut diff, &mut coeff) <= r_sq {
                        out.push(grid.flat_index(&cell));
                    }
                    let mut axis = 0;
                    loop {
                        if axis == n {
                            break 'cells;
                        }
                        cell[axis] += 1;
                        if cell[axis] > hi[axis] {
                            cell[axis] = lo[axis];
                            axis += 1;
                        } else {
                            break;
                        }
                    }
                }
            }
        }
        // Advance the t odometer.
        let mut axis = 0;
        loop {
            if axis == k {
                out.sort_unstable();
                out.dedup();
                return out;
            }
            t_iter[axis] += 1;
            if t_iter[axis] >= t_steps {
                t_iter[axis] = 0;
                axis += 1;
            } else {
                break;
            }
        }
    }
}

/// Rasterizes the family's `delta`-slabs: the count at each cell is the
/// number of planes whose slab contains the cell center.
pub fn rasterize_family(family: &[AffinePlane], delta: f64) -> Result<IncidenceField> {
    let n = match family.first() {
        Some(p) => p.n(),
        None => {
            // An empty family still needs a grid; default to the plane.
            return Ok(IncidenceField::zero(Grid::new(2, delta)?));
        }
    };
    let k = family[0].k();
    for p in family {
        if p.n() != n || p.k() != k {
            return Err(Error::DimensionMismatch(p.n(), n));
        }
    }
    let grid = Grid::new(n, delta)?;
    let mut field = IncidenceField::zero(grid.clone());
    // Chunked parallel enumeration; integer accumulation is
    // order-independent, so the result does not depend on thread count.
    for chunk in family.chunks(512) {
        let lists: Vec<Vec<usize>> = chunk
            .par_iter()
            .map(|plane| slab_cells(plane, delta, &grid))
            .collect();
        for list in lists {
            for idx in list {
                field.counts[idx] += 1;
            }
        }
    }
    Ok(field)
}

/// `L^p` norm of the field over the unit ball: the Riemann sum
/// `(sum counts^p delta^n)^{1/p}` at cell centers.
pub fn lp_norm(field: &IncidenceField, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidParams(format!("need p >= 1, got {p}")));
    }
    let n = field.grid.n();
    let delta = field.grid.delta();
    // Fixed-size chunks combined in index order keep the reduction
    // bit-stable under any thread count.
    let chunk_sums: Vec<f64> = field
        .counts
        .par_chunks(1 << 14)
        .map(|chunk| {
            chunk
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { (c as f64).powf(p) })
                .sum::<f64>()
        })
        .collect();
    let total: f64 = chunk_sums.iter().sum();
    Ok((total * delta.powi(n as i32)).powf(1.0 / p))
}

/// Lebesgue measure of the slab by cell counting at resolution `res`
/// (defaulting to `r/8`): the number of `res`-cells of `[-1,1]^n` whose
/// centers lie in the slab, times `res^n`.
pub fn slab_volume(slab: &Slab) -> f64 {
    slab_volume_at(slab, slab.r / 8.0)
}

pub fn slab_volume_at(slab: &Slab, res: f64) -> f64 {
    let flat = FlatPlane::new(&slab.plane);
    let n = flat.n;
    let k = flat.k;
    let r = slab.r;
    let per_axis = (2.0 / res).ceil() as usize;
    let step = res;
    let cand_r = r + (k as f64).sqrt() * step / 2.0 + 1e-12;
    let t_keep = 1.0 + (k as f64).sqrt() * step / 2.0 + 1e-9;
    let t_span = 1.5;
    let t_steps = (2.0 * t_span / step).ceil() as i64;
    let r_sq = r * r;

    let counted = (0..t_steps.pow(k as u32))
        .into_par_iter()
        .map(|flat_t| {
            // Decode the k-dimensional t index.
            let mut rest = flat_t;
            let mut foot = flat.offset.clone();
            let mut t_norm_sq = 0.0;
            for row in 0..k {
                let ti = rest % t_steps;
                rest /= t_steps;
                let tv = -t_span + (ti as f64 + 0.5) * step;
                t_norm_sq += tv * tv;
                for col in 0..n {
                    foot[col] += flat.basis[row * n + col] * tv;
                }
            }
            if t_norm_sq > t_keep * t_keep {
                return Vec::new();
            }
            let mut cells = Vec::new();
            let mut lo = vec![0usize; n];
            let mut hi = vec![0usize; n];
            for axis in 0..n {
                let lo_f = ((foot[axis] - cand_r + 1.0) / step).floor();
                let hi_f = ((foot[axis] + cand_r + 1.0) / step).floor();
                if hi_f < 0.0 || lo_f >= per_axis as f64 {
                    return Vec::new();
                }
                lo[axis] = lo_f.max(0.0) as usize;
                hi[axis] = (hi_f as usize).min(per_axis - 1);
            }
            let mut cell = lo.clone();
            let mut diff = vec![0.0; n];
            let mut coeff = vec![0.0; k];
            let mut point = vec![0.0; n];
            'cells: loop {
                let mut norm_sq = 0.0;
                for axis in 0..n {
                    point[axis] = -1.0 + (cell[axis] as f64 + 0.5) * step;
                    norm_sq += point[axis] * point[axis];
                }
                if norm_sq <= 1.0 && flat.dist_sq(&point, &mut diff, &mut coeff) <= r_sq {
                    cells.push(cell.iter().fold(0usize, |acc, &i| acc * per_axis + i));
                }
                let mut axis = 0;
                loop {
                    if axis == n {
                        break 'cells;
                    }
                    cell[axis] += 1;
                    if cell[axis] > hi[axis] {
                        cell[axis] = lo[axis];
                        axis += 1;
                    } else {
                        break;
                    }
                }
            }
            cells
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    let mut cells = counted;
    cells.sort_unstable();
    cells.dedup();
    cells.len() as f64 * res.powi(n as i32)
}

/// Convenience: rasterize a [`PlaneFamily`] at its own scale.
pub fn rasterize(family: &PlaneFamily) -> Result<IncidenceField> {
    rasterize_family(&family.planes, family.delta)
}
