//! The cell grid over `B^n(0,1)` and incidence fields on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::dyadic_level;

/// Cells with more than this many entries are refused.
pub const CELL_GUARD: u128 = 1_000_000_000;

/// Axis-aligned `delta`-cube grid covering `[-1,1]^n`; only cells whose
/// centers lie in the closed unit ball carry field values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    delta: f64,
    per_axis: usize,
}

impl Grid {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        dyadic_level(delta)?;
        let per_axis = (2.0 / delta) as usize;
        let cells = (per_axis as u128).pow(n as u32);
        if cells > CELL_GUARD {
            return Err(Error::GridTooLarge {
                cells,
                limit: CELL_GUARD,
            });
        }
        Ok(Grid { n, delta, per_axis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.per_axis.pow(self.n as u32)
    }

    /// Center coordinate along one axis.
    pub fn axis_center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.delta
    }

    /// Center of the cell with the given flat index (row-major).
    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut rest = flat;
        let mut out = vec![0.0; self.n];
        for axis in (0..self.n).rev() {
            out[axis] = self.axis_center(rest % self.per_axis);
            rest /= self.per_axis;
        }
        out
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0usize, |acc, &i| acc * self.per_axis + i)
    }

    /// True iff the cell center lies in the closed unit ball.
    pub fn center_in_ball(&self, flat: usize) -> bool {
        self.center(flat).iter().map(|c| c * c).sum::<f64>() <= 1.0
    }
}

/// The rasterized incidence function: per-cell counts of slabs covering
/// the cell center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IncidenceField {
    pub grid: Grid,
    /// One count per grid cell (row-major flat order); cells whose
    /// centers fall outside the unit ball stay at zero.
    pub counts: Vec<u32>,
}

impl IncidenceField {
    pub fn zero(grid: Grid) -> Self {
        let cells = grid.cell_count();
        IncidenceField {
            grid,
            counts: vec![0; cells],
        }
    }

    /// Constant field `value` on every in-ball cell.
    pub fn constant(grid: Grid, value: u32) -> Self {
        let cells = grid.cell_count();
        let mut counts = vec![0; cells];
        for (flat, c) in counts.iter_mut().enumerate() {
            if grid.center_in_ball(flat) {
                *c = value;
            }
        }
        IncidenceField { grid, counts }
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Cellwise sum of two fields over the same grid.
    pub fn add(&self, other: &IncidenceField) -> Result<IncidenceField> {
        if self.grid != other.grid {
            return Err(Error::InvalidParams("fields live on different grids".into()));
        }
        let counts = self
            .counts
            .iter()
            .zip(other.counts.iter())
            .map(|(a, b)| a + b)
            .collect();
        Ok(IncidenceField {
            grid: self.grid.clone(),
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts_and_centers() {
        let g = Grid::new(2, 0.25).unwrap();
        assert_eq!(g.per_axis(), 8);
        assert_eq!(g.cell_count(), 64);
        assert!((g.axis_center(0) + 0.875).abs() < 1e-15);
        assert!((g.axis_center(7) - 0.875).abs() < 1e-15);
        let c = g.center(g.flat_index(&[3, 4]));
        assert!((c[0] + 0.125).abs() < 1e-15);
        assert!((c[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn guard_refuses_oversized_grids() {
        assert!(matches!(
            Grid::new(4, 2f64.powi(-8)),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn corner_cells_are_outside_the_ball() {
        let g = Grid::new(2, 0.25).unwrap();
        assert!(!g.center_in_ball(g.flat_index(&[0, 0])));
        assert!(g.center_in_ball(g.flat_index(&[4, 4])));
    }

    #[test]
    fn constant_field_covers_roughly_pi_over_four() {
        let g = Grid::new(2, 2f64.powi(-5)).unwrap();
        let f = IncidenceField::constant(g, 1);
        let covered = f.counts.iter().filter(|&&c| c > 0).count() as f64;
        let frac = covered / f.grid.cell_count() as f64;
        assert!((frac - std::f64::consts::FRAC_PI_4).abs() < 0.02);
    }
}
