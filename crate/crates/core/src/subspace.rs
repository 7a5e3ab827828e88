//! Linear subspaces with orthonormal row bases, and affine k-planes
//! `V = dir(V) + x_V` with the offset perpendicular to the direction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual allowed in the orthonormality and perpendicularity checks.
pub const ORTHO_TOL: f64 = 1e-10;

/// A linear subspace of `R^n` stored as `dim` orthonormal rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    n: usize,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Builds a subspace from orthonormal rows; rejects rows whose Gram
    /// matrix differs from the identity by more than `ORTHO_TOL`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let n = basis.ncols();
        let dim = basis.nrows();
        if dim > n {
            return Err(Error::InvalidParams(format!(
                "{dim} basis rows in ambient dimension {n}"
            )));
        }
        let gram = &basis * basis.transpose();
        let resid = (&gram - DMatrix::<f64>::identity(dim, dim)).abs().max();
        if dim > 0 && resid > ORTHO_TOL {
            return Err(Error::NotOrthonormal(resid));
        }
        Ok(Subspace { n, basis })
    }

    /// Orthonormalizes the row span of `rows` (dropping near-dependent
    /// rows below `rank_tol`) and returns the resulting subspace.
    pub fn from_spanning_rows(rows: DMatrix<f64>, rank_tol: f64) -> Self {
        let n = rows.ncols();
        if rows.nrows() == 0 {
            return Subspace::zero(n);
        }
        let svd = rows.svd(true, true);
        let vt = svd.v_t.expect("svd with v requested");
        let rank = svd
            .singular_values
            .iter()
            .filter(|sv| **sv > rank_tol)
            .count();
        let mut basis = DMatrix::zeros(rank, n);
        let mut row = 0;
        for (i, sv) in svd.singular_values.iter().enumerate() {
            if *sv > rank_tol {
                basis.row_mut(row).copy_from(&vt.row(i));
                row += 1;
            }
        }
        Subspace { n, basis }
    }

    /// The zero subspace `{0}`.
    pub fn zero(n: usize) -> Self {
        Subspace {
            n,
            basis: DMatrix::zeros(0, n),
        }
    }

    /// The full space `R^n`.
    pub fn full(n: usize) -> Self {
        Subspace {
            n,
            basis: DMatrix::identity(n, n),
        }
    }

    /// Span of the coordinate axes listed in `axes`.
    pub fn coordinate(n: usize, axes: &[usize]) -> Self {
        let mut basis = DMatrix::zeros(axes.len(), n);
        for (row, &ax) in axes.iter().enumerate() {
            basis[(row, ax)] = 1.0;
        }
        Subspace { n, basis }
    }

    /// Span of a single (not necessarily unit) vector.
    pub fn line(v: &DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidParams("zero vector spans nothing".into()));
        }
        let mut basis = DMatrix::zeros(1, v.len());
        basis.row_mut(0).copy_from(&(v / norm).transpose());
        Subspace::new(basis)
    }

    /// Haar-distributed random `dim`-subspace (QR of a Gaussian matrix).
    pub fn random<R: Rng>(dim: usize, n: usize, rng: &mut R) -> Self {
        assert!(dim <= n);
        if dim == 0 {
            return Subspace::zero(n);
        }
        loop {
            let g = DMatrix::from_fn(n, dim, |_, _| gaussian(rng));
            let qr = g.qr();
            let q = qr.q();
            // Rank-deficient draws have probability zero; retry on the
            // measure-zero numerical event.
            let basis = q.transpose();
            if let Ok(s) = Subspace::new(basis) {
                return s;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthonormal rows spanning the subspace (`dim x n`).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector `P = B^T B` (`n x n`, symmetric, idempotent).
    pub fn projector(&self) -> DMatrix<f64> {
        self.basis.transpose() * &self.basis
    }

    /// Projection of a vector onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * (&self.basis * v)
    }

    /// Component of `v` perpendicular to the subspace.
    pub fn reject(&self, v: &DVector<f64>) -> DVector<f64> {
        v - self.project(v)
    }

    /// Orthogonal complement, computed from the eigenvectors of `I - P`.
    pub fn complement(&self) -> Subspace {
        let n = self.n;
        let co_dim = n - self.dim();
        if co_dim == 0 {
            return Subspace::zero(n);
        }
        if self.dim() == 0 {
            return Subspace::full(n);
        }
        let perp = DMatrix::<f64>::identity(n, n) - self.projector();
        let eig = perp.symmetric_eigen();
        let mut cols: Vec<(f64, usize)> = eig
            .eigenvalues
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, ev)| (ev, i))
            .collect();
        cols.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut basis = DMatrix::zeros(co_dim, n);
        for (row, &(_, col)) in cols.iter().take(co_dim).enumerate() {
            basis.row_mut(row).copy_from(&eig.eigenvectors.column(col).transpose());
        }
        Subspace::from_spanning_rows(basis, 1e-8)
    }

    /// True iff this subspace contains `other` (rank test on the stacked
    /// bases with singular values below `tol` treated as zero).
    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        if other.dim() > self.dim() {
            return false;
        }
        if other.dim() == 0 {
            return true;
        }
        // other is contained iff rejecting its basis leaves nothing.
        let rej = other.basis() * (DMatrix::<f64>::identity(self.n, self.n) - self.projector());
        rej.svd(false, false).singular_values.iter().all(|sv| *sv <= tol)
    }
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller keeps the draw sequence stable across rand versions.
    loop {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if u > f64::MIN_POSITIVE {
            return (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos();
        }
    }
}

/// Orthogonal projector onto a subspace, `P = B^T B`.
pub fn projection_matrix(w: &Subspace) -> DMatrix<f64> {
    w.projector()
}

/// An affine k-plane `V = dir(V) + x_V` with `x_V` perpendicular to the
/// direction and `|x_V| < 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePlane {
    dir: Subspace,
    offset: DVector<f64>,
}

impl AffinePlane {
    /// Validates perpendicularity of the offset and `|x_V| < 1/2`.
    pub fn new(dir: Subspace, offset: DVector<f64>) -> Result<Self> {
        let plane = AffinePlane::with_offset_bound(dir, offset, 0.5)?;
        Ok(plane)
    }

    /// Same as [`AffinePlane::new`] with a caller-chosen offset bound;
    /// rescaling maps produce planes with offsets beyond 1/2.
    pub fn with_offset_bound(dir: Subspace, offset: DVector<f64>, bound: f64) -> Result<Self> {
        if offset.len() != dir.n() {
            return Err(Error::DimensionMismatch(offset.len(), dir.n()));
        }
        if dir.dim() > 0 {
            let resid = (dir.basis() * &offset).abs().max();
            if resid > ORTHO_TOL {
                return Err(Error::OffsetNotPerpendicular(resid));
            }
        }
        let norm = offset.norm();
        if norm >= bound {
            return Err(Error::OffsetOutOfRange(norm));
        }
        Ok(AffinePlane { dir, offset })
    }

    /// Builds the plane through `point` with the given direction; the
    /// perpendicular offset is recovered by rejecting the point.
    pub fn through_point(dir: Subspace, point: &DVector<f64>) -> Result<Self> {
        let offset = dir.reject(point);
        AffinePlane::new(dir, offset)
    }

    pub fn dir(&self) -> &Subspace {
        &self.dir
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.offset
    }

    pub fn n(&self) -> usize {
        self.dir.n()
    }

    pub fn k(&self) -> usize {
        self.dir.dim()
    }

    /// Distance from a point to the plane, `|(I - P_dir)(x - x_V)|`.
    pub fn distance(&self, point: &DVector<f64>) -> f64 {
        self.dir.reject(&(point - &self.offset)).norm()
    }
}

/// A metric ball; centers are subspaces on the Grassmannian or planes on
/// its affine counterpart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricBall<C> {
    pub center: C,
    pub radius: f64,
}

impl<C> MetricBall<C> {
    pub fn new(center: C, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(MetricBall { center, radius })
    }
}
