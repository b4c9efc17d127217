//! Structured tensor grids and the divergence-form stencil shared by the
//! spatial Laplacian and the space-time wave operator.

use crate::error::{invalid, Result};
use crate::sparse::Csr;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Tensor-product grid. Axis 0 varies slowest in the flat node index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub nodes: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl SpatialGrid {
    pub fn new(nodes: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>, periodic: Vec<bool>) -> Result<Self> {
        let d = nodes.len();
        if d == 0 || spacing.len() != d || origin.len() != d || periodic.len() != d {
            return Err(invalid("grid axis lists must be non-empty and of equal length"));
        }
        if let Some(n) = nodes.iter().find(|&&n| n < 8) {
            return Err(invalid(format!("insufficient resolution: {n} nodes on an axis (minimum 8)")));
        }
        if spacing.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(invalid("grid spacings must be positive"));
        }
        Ok(SpatialGrid { nodes, spacing, origin, periodic })
    }

    /// Periodic grid covering `[origin, origin + period)` on every axis.
    pub fn periodic_box(nodes: &[usize], periods: &[f64], origin: &[f64]) -> Result<Self> {
        let spacing = nodes.iter().zip(periods).map(|(&n, &l)| l / n as f64).collect();
        SpatialGrid::new(nodes.to_vec(), spacing, origin.to_vec(), vec![true; nodes.len()])
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.nodes[axis] as f64 * self.spacing[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.nodes[a];
            flat /= self.nodes[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.nodes).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    /// Neighbour along `axis` at offset `step` (±1), wrapping on periodic axes.
    pub fn neighbor(&self, flat: usize, axis: usize, step: isize) -> Option<usize> {
        let mut idx = self.multi_index(flat);
        let n = self.nodes[axis] as isize;
        let j = idx[axis] as isize + step;
        let j = if self.periodic[axis] {
            j.rem_euclid(n)
        } else if j < 0 || j >= n {
            return None;
        } else {
            j
        };
        idx[axis] = j as usize;
        Some(self.flat_index(&idx))
    }

    /// Nearest node to a point (periodic axes wrapped).
    pub fn nearest(&self, x: &[f64]) -> Option<usize> {
        let mut idx = vec![0; self.dim()];
        for a in 0..self.dim() {
            let n = self.nodes[a] as isize;
            let j = ((x[a] - self.origin[a]) / self.spacing[a]).round() as isize;
            idx[a] = if self.periodic[a] {
                j.rem_euclid(n) as usize
            } else if (0..n).contains(&j) {
                j as usize
            } else {
                return None;
            };
        }
        Some(self.flat_index(&idx))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            let hi = if self.periodic[a] {
                self.origin[a] + self.extent(a)
            } else {
                self.origin[a] + (self.nodes[a] - 1) as f64 * self.spacing[a]
            };
            x[a] >= self.origin[a] - 1e-12 && x[a] <= hi + 1e-12
        })
    }
}

/// Assembles the symmetric form matrix `S` of `∫ a^{jk} ∂_j u ∂_k v` where
/// `a = |g|^{1/2} g^{jk}` is given at every node. The operator
/// `|g|^{-1/2} ∂_j |g|^{1/2} g^{jk} ∂_k` is then `-W^{-1} S` with
/// `W = |g|^{1/2} · cell volume`.
///
/// Axis terms use face coefficients (mean of the two nodal values); mixed
/// terms average the four forward/backward difference pairings at each node.
pub fn divergence_form(grid: &SpatialGrid, coeff: &[DMatrix<f64>]) -> Csr {
    let d = grid.dim();
    let vol = grid.cell_volume();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(grid.len() * (1 + 4 * d * d));
    for x in 0..grid.len() {
        for i in 0..d {
            if let Some(xp) = grid.neighbor(x, i, 1) {
                let a = 0.5 * (coeff[x][(i, i)] + coeff[xp][(i, i)]);
                if a != 0.0 {
                    let c = vol * a / (grid.spacing[i] * grid.spacing[i]);
                    trip.push((x, x, c));
                    trip.push((xp, xp, c));
                    trip.push((x, xp, -c));
                    trip.push((xp, x, -c));
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let a = coeff[x][(i, j)];
                if a == 0.0 {
                    continue;
                }
                for si in [1isize, -1] {
                    for sj in [1isize, -1] {
                        let (Some(ni), Some(nj)) = (grid.neighbor(x, i, si), grid.neighbor(x, j, sj)) else {
                            continue;
                        };
                        // D_i^s u = s (u_{x+s e_i} - u_x) / h_i
                        let di = [(ni, si as f64 / grid.spacing[i]), (x, -(si as f64) / grid.spacing[i])];
                        let dj = [(nj, sj as f64 / grid.spacing[j]), (x, -(sj as f64) / grid.spacing[j])];
                        let c = 0.25 * vol * a;
                        for &(p, vp) in &di {
                            for &(q, vq) in &dj {
                                // a^{ij} and a^{ji} are both visited, so each
                                // ordered pair contributes its own symmetric half.
                                trip.push((p, q, 0.5 * c * vp * vq));
                                trip.push((q, p, 0.5 * c * vp * vq));
                            }
                        }
                    }
                }
            }
        }
    }
    Csr::from_triplets(grid.len(), grid.len(), &trip)
}
