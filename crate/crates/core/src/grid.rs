//! Uniform Cartesian cell-centered grids in one or three dimensions.
//!
//! A 1D grid is stored as an `n x 1 x 1` box: only the first axis is
//! active and the inactive coordinates are pinned to zero. Cell volumes of
//! a 1D grid are lengths (per unit cross-section).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Non-periodic box; each solver chooses its own edge treatment.
    #[default]
    Open,
    Periodic,
}

/// Treatment of samples that fall outside the cell-center lattice of an open grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Edge {
    /// Zero-gradient continuation.
    Clamp,
    /// Linear continuation from the two outermost cells.
    Extrapolate,
    /// Fixed value in every ghost cell.
    Ghost(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    shape: [usize; 3],
    lo: [f64; 3],
    hi: [f64; 3],
    dim: usize,
    boundary: Boundary,
}

impl Grid {
    /// `n` cells on `[lo, hi]`.
    pub fn line(n: usize, lo: f64, hi: f64, boundary: Boundary) -> Result<Grid> {
        if n < 3 {
            return invalid(format!("a line grid needs at least 3 cells, got {n}"));
        }
        if !(hi > lo) {
            return invalid(format!("empty interval [{lo}, {hi}]"));
        }
        Ok(Grid {
            shape: [n, 1, 1],
            lo: [lo, 0.0, 0.0],
            hi: [hi, 1.0, 1.0],
            dim: 1,
            boundary,
        })
    }

    /// `n^3` cells on `[lo, hi]^3`.
    pub fn cube(n: usize, lo: f64, hi: f64, boundary: Boundary) -> Result<Grid> {
        if n < 3 {
            return invalid(format!("a cube grid needs at least 3 cells per axis, got {n}"));
        }
        if !(hi > lo) {
            return invalid(format!("empty interval [{lo}, {hi}]"));
        }
        Ok(Grid {
            shape: [n; 3],
            lo: [lo; 3],
            hi: [hi; 3],
            dim: 3,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 3] {
        self.hi
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.shape[axis] as f64
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn ravel(&self, ijk: [usize; 3]) -> usize {
        (ijk[2] * self.shape[1] + ijk[1]) * self.shape[0] + ijk[0]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let rest = idx / self.shape[0];
        [i, rest % self.shape[1], rest / self.shape[1]]
    }

    pub fn center(&self, idx: usize) -> [f64; 3] {
        let ijk = self.unravel(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.lo[a] + (ijk[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    pub fn centers(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    /// Face neighbor along `axis`; `None` past an open boundary.
    pub fn neighbor(&self, idx: usize, axis: usize, offset: isize) -> Option<usize> {
        let mut ijk = self.unravel(idx);
        let n = self.shape[axis] as isize;
        let mut j = ijk[axis] as isize + offset;
        if self.periodic() {
            j = j.rem_euclid(n);
        } else if j < 0 || j >= n {
            return None;
        }
        ijk[axis] = j as usize;
        Some(self.ravel(ijk))
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.hi[a])
    }

    /// Maps a point back into the primary box of a periodic grid.
    pub fn wrap(&self, mut x: [f64; 3]) -> [f64; 3] {
        if self.periodic() {
            for a in 0..self.dim {
                let len = self.hi[a] - self.lo[a];
                x[a] = self.lo[a] + (x[a] - self.lo[a]).rem_euclid(len);
            }
        }
        x
    }

    /// Multilinear interpolation of a cell-centered field.
    pub fn sample(&self, field: &[f64], x: [f64; 3], edge: Edge) -> f64 {
        debug_assert_eq!(field.len(), self.len());
        let mut idx = [[0isize; 2]; 3];
        let mut t = [0.0; 3];
        for a in 0..self.dim {
            let n = self.shape[a] as isize;
            let s = (x[a] - self.lo[a]) / self.spacing(a) - 0.5;
            let f = s.floor();
            if self.periodic() {
                let i0 = (f as isize).rem_euclid(n);
                idx[a] = [i0, (i0 + 1) % n];
                t[a] = s - f;
                continue;
            }
            match edge {
                Edge::Clamp => {
                    let sc = s.clamp(0.0, (n - 1) as f64);
                    let i0 = (sc.floor() as isize).min(n - 2);
                    idx[a] = [i0, i0 + 1];
                    t[a] = sc - i0 as f64;
                }
                Edge::Extrapolate => {
                    let i0 = (f as isize).clamp(0, n - 2);
                    idx[a] = [i0, i0 + 1];
                    t[a] = s - i0 as f64;
                }
                Edge::Ghost(g) => {
                    if s < -1.0 || s > n as f64 {
                        return g;
                    }
                    let i0 = f as isize;
                    idx[a] = [i0, i0 + 1];
                    t[a] = s - f;
                }
            }
        }
        let ghost = match edge {
            Edge::Ghost(g) => g,
            _ => 0.0,
        };
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut weight = 1.0;
            let mut ijk = [0usize; 3];
            let mut outside = false;
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                weight *= if bit == 1 { t[a] } else { 1.0 - t[a] };
                let i = idx[a][bit];
                if i < 0 || i >= self.shape[a] as isize {
                    outside = true;
                } else {
                    ijk[a] = i as usize;
                }
            }
            if weight == 0.0 {
                continue;
            }
            acc += weight
                * if outside {
                    ghost
                } else {
                    field[self.ravel(ijk)]
                };
        }
        acc
    }

    /// First derivative along `axis`: centered in the interior, second-order
    /// one-sided at open boundaries.
    pub fn derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.len())
            .map(|i| match (self.neighbor(i, axis, -1), self.neighbor(i, axis, 1)) {
                (Some(l), Some(r)) => (field[r] - field[l]) / (2.0 * h),
                (None, Some(r)) => {
                    let r2 = self.neighbor(r, axis, 1).expect("grid has >= 3 cells");
                    (-3.0 * field[i] + 4.0 * field[r] - field[r2]) / (2.0 * h)
                }
                (Some(l), None) => {
                    let l2 = self.neighbor(l, axis, -1).expect("grid has >= 3 cells");
                    (3.0 * field[i] - 4.0 * field[l] + field[l2]) / (2.0 * h)
                }
                (None, None) => 0.0,
            })
            .collect()
    }

    /// Grid-weighted L2 norm.
    pub fn l2_norm(&self, field: &[f64]) -> f64 {
        (field.iter().map(|v| v * v).sum::<f64>() * self.cell_volume()).sqrt()
    }

    pub fn integrate(&self, field: &[f64]) -> f64 {
        field.iter().sum::<f64>() * self.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fields_interpolate_exactly() {
        let g = Grid::cube(6, -1.0, 1.0, Boundary::Open).unwrap();
        let f: Vec<f64> = g
            .centers()
            .iter()
            .map(|x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2])
            .collect();
        let x = [0.13, -0.41, 0.27];
        let v = g.sample(&f, x, Edge::Clamp);
        assert!((v - (1.0 + 0.26 + 0.41 + 0.135)).abs() < 1e-13);
        // linear continuation is exact outside the lattice as well
        let x = [0.98, 0.0, -0.99];
        let v = g.sample(&f, x, Edge::Extrapolate);
        assert!((v - (1.0 + 1.96 - 0.495)).abs() < 1e-13);
    }

    #[test]
    fn ghost_edge_blends_toward_ghost_value() {
        let g = Grid::line(4, 0.0, 4.0, Boundary::Open).unwrap();
        let f = vec![1.0; 4];
        assert_eq!(g.sample(&f, [0.0, 0.0, 0.0], Edge::Ghost(3.0)), 2.0);
        assert_eq!(g.sample(&f, [-2.0, 0.0, 0.0], Edge::Ghost(3.0)), 3.0);
        assert_eq!(g.sample(&f, [2.0, 0.0, 0.0], Edge::Ghost(3.0)), 1.0);
    }

    #[test]
    fn periodic_sampling_wraps() {
        let g = Grid::line(8, 0.0, 1.0, Boundary::Periodic).unwrap();
        let f: Vec<f64> = (0..8).map(|i| i as f64).collect();
        // halfway between the last and the first cell center
        assert!((g.sample(&f, [1.0, 0.0, 0.0], Edge::Clamp) - 3.5).abs() < 1e-14);
        assert!((g.sample(&f, [0.0, 0.0, 0.0], Edge::Clamp) - 3.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_quadratic_is_exact() {
        let g = Grid::line(10, 0.0, 1.0, Boundary::Open).unwrap();
        let f: Vec<f64> = g.centers().iter().map(|x| x[0] * x[0]).collect();
        let d = g.derivative(&f, 0);
        for (i, x) in g.centers().iter().enumerate() {
            assert!((d[i] - 2.0 * x[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn ravel_roundtrip() {
        let g = Grid::cube(5, 0.0, 1.0, Boundary::Open).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.ravel(g.unravel(idx)), idx);
        }
    }
}
