//! Spatial Riemannian manifolds `(Y, h)`: Laplace–Beltrami assembly, spectra
//! and scalar curvature.

use crate::curvature::{self, MetricField};
use crate::error::{invalid, Error, Result};
use crate::grid::{divergence_form, SpatialGrid};
use crate::special::gamma_real;
use crate::sparse::Csr;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    FlatTorus { periods: Vec<f64> },
    RoundSphere { dim: usize, radius: f64 },
    /// Nodal metric samples, `d*d` row-major components per node.
    GridMetric { grid: SpatialGrid, h: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannianModel {
    pub kind: ModelKind,
    pub dim: usize,
}

impl RiemannianModel {
    pub fn flat_torus(periods: &[f64]) -> Result<Self> {
        if periods.is_empty() || periods.iter().any(|&p| !(p > 0.0)) {
            return Err(invalid("torus periods must be positive"));
        }
        Ok(RiemannianModel { kind: ModelKind::FlatTorus { periods: periods.to_vec() }, dim: periods.len() })
    }

    pub fn round_sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim < 2 || !(radius > 0.0) {
            return Err(invalid("sphere needs dim >= 2 and positive radius"));
        }
        Ok(RiemannianModel { kind: ModelKind::RoundSphere { dim, radius }, dim })
    }

    pub fn grid_metric(grid: SpatialGrid, h: Vec<f64>) -> Result<Self> {
        let d = grid.dim();
        if h.len() != grid.len() * d * d {
            return Err(invalid("metric sample count does not match grid"));
        }
        for node in 0..grid.len() {
            let m = DMatrix::from_row_slice(d, d, &h[node * d * d..(node + 1) * d * d]);
            let asym = (&m - m.transpose()).amax();
            let min_eig = SymmetricEigen::new(m.clone()).eigenvalues.min();
            if asym > 1e-12 * m.amax() || !(min_eig > 0.0) {
                return Err(invalid(format!(
                    "metric not symmetric positive-definite at node {:?} (min eigenvalue {min_eig:.3e})",
                    grid.multi_index(node)
                )));
            }
        }
        Ok(RiemannianModel { kind: ModelKind::GridMetric { grid, h }, dim: d })
    }

    /// Samples `f(y)` at every node of `grid`.
    pub fn grid_metric_from_fn<F: Fn(&[f64]) -> DMatrix<f64>>(grid: SpatialGrid, f: F) -> Result<Self> {
        let d = grid.dim();
        let mut h = Vec::with_capacity(grid.len() * d * d);
        for node in 0..grid.len() {
            let m = f(&grid.coords(node));
            h.extend(m.transpose().iter());
        }
        RiemannianModel::grid_metric(grid, h)
    }

    /// The circle of circumference `2π` with `h = (1 + amp cos y)² dy²`.
    pub fn warped_circle(nodes: usize, amp: f64) -> Result<Self> {
        let grid = SpatialGrid::periodic_box(&[nodes], &[2.0 * PI], &[0.0])?;
        RiemannianModel::grid_metric_from_fn(grid, |y| DMatrix::from_element(1, 1, (1.0 + amp * y[0].cos()).powi(2)))
    }

    /// Metric components at a node of `grid`.
    fn nodal_metric(&self, grid: &SpatialGrid, node: usize) -> Result<DMatrix<f64>> {
        match &self.kind {
            ModelKind::GridMetric { grid: g, h } => {
                if g != grid {
                    return Err(invalid("grid differs from the metric's sampling grid"));
                }
                let d = self.dim;
                Ok(DMatrix::from_row_slice(d, d, &h[node * d * d..(node + 1) * d * d]))
            }
            ModelKind::FlatTorus { periods } => {
                for (a, p) in periods.iter().enumerate() {
                    if (grid.extent(a) - p).abs() > 1e-12 * p || !grid.periodic[a] {
                        return Err(invalid("grid does not tile the torus periods"));
                    }
                }
                Ok(DMatrix::identity(self.dim, self.dim))
            }
            ModelKind::RoundSphere { .. } => Err(Error::Unsupported(
                "round sphere has no periodic grid chart; use analytic_spectrum".into(),
            )),
        }
    }
}

/// Periodic trigonometric cardinal function for `n` nodes, offset `θ = 2π(x−x_j)/L`.
fn cardinal(n: usize, theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    if s.abs() < 1e-14 {
        return if (theta / (2.0 * PI)).round() as i64 % 2 == 0 || n % 2 == 1 { 1.0 } else { -1.0 };
    }
    let nf = n as f64;
    if n % 2 == 0 {
        (0.5 * nf * theta).sin() / (nf * (0.5 * theta).tan())
    } else {
        (0.5 * nf * theta).sin() / (nf * s)
    }
}

impl MetricField for RiemannianModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            ModelKind::FlatTorus { .. } => DMatrix::identity(self.dim, self.dim),
            ModelKind::RoundSphere { radius, .. } => {
                // stereographic chart from the pole
                let r2 = radius * radius;
                let y2: f64 = y.iter().map(|v| v * v).sum();
                DMatrix::identity(self.dim, self.dim) * (4.0 * r2 * r2 / (r2 + y2).powi(2))
            }
            ModelKind::GridMetric { grid, h } => {
                let d = self.dim;
                if let Some(node) = grid.nearest(y) {
                    let c = grid.coords(node);
                    if c.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-13 * (1.0 + a.abs())) {
                        return DMatrix::from_row_slice(d, d, &h[node * d * d..(node + 1) * d * d]);
                    }
                }
                let weights: Vec<Vec<f64>> = (0..d)
                    .map(|a| {
                        (0..grid.nodes[a])
                            .map(|j| {
                                let xj = grid.origin[a] + j as f64 * grid.spacing[a];
                                cardinal(grid.nodes[a], 2.0 * PI * (y[a] - xj) / grid.extent(a))
                            })
                            .collect()
                    })
                    .collect();
                let mut m = DMatrix::zeros(d, d);
                for node in 0..grid.len() {
                    let idx = grid.multi_index(node);
                    let w: f64 = idx.iter().enumerate().map(|(a, &j)| weights[a][j]).product();
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..d {
                        for c in 0..d {
                            m[(r, c)] += w * h[node * d * d + r * d + c];
                        }
                    }
                }
                m
            }
        }
    }

    fn fd_step(&self) -> f64 {
        match &self.kind {
            ModelKind::RoundSphere { radius, .. } => 1e-2 * radius,
            ModelKind::GridMetric { grid, .. } => 0.25 * grid.spacing.iter().cloned().fold(f64::INFINITY, f64::min),
            ModelKind::FlatTorus { .. } => 1e-2,
        }
    }
}

/// Discrete `Δ_h` on a periodic grid together with its quadrature weights.
#[derive(Debug, Clone)]
pub struct LaplaceBeltrami {
    pub grid: SpatialGrid,
    /// `Δ_h` as an operator on nodal values.
    pub matrix: Csr,
    /// Symmetric form matrix `S` with `Δ_h = −W⁻¹ S`.
    pub stiffness: Csr,
    /// `√|h| · cell volume` at each node.
    pub weight: Vec<f64>,
}

pub fn assemble_laplace_beltrami(model: &RiemannianModel, grid: &SpatialGrid) -> Result<LaplaceBeltrami> {
    if grid.dim() != model.dim {
        return Err(invalid("grid dimension differs from model dimension"));
    }
    if grid.periodic.iter().any(|p| !p) {
        return Err(invalid("closed manifolds only: every grid axis must be periodic"));
    }
    let d = model.dim;
    let mut coeff = Vec::with_capacity(grid.len());
    let mut weight = Vec::with_capacity(grid.len());
    for node in 0..grid.len() {
        let h = model.nodal_metric(grid, node)?;
        let det = h.determinant();
        let inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid(format!("singular metric at node {:?}", grid.multi_index(node))))?;
        if !(det > 0.0) {
            return Err(invalid(format!("non-positive-definite metric at node {:?}", grid.multi_index(node))));
        }
        coeff.push(inv * det.sqrt());
        weight.push(det.sqrt() * grid.cell_volume());
        debug_assert_eq!(coeff.last().unwrap().nrows(), d);
    }
    let stiffness = divergence_form(grid, &coeff);
    let inv_w: Vec<f64> = weight.iter().map(|w| -1.0 / w).collect();
    let matrix = stiffness.scale_rows(&inv_w);
    Ok(LaplaceBeltrami { grid: grid.clone(), matrix, stiffness, weight })
}

pub fn weighted_dot(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

/// Eigen-content of `−Δ_h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Eigenfunctions {
    /// Columns are weighted-orthonormal nodal eigenvectors.
    Grid { vectors: Vec<Vec<f64>>, weight: Vec<f64> },
    /// Homogeneous spaces: multiplicity and on-diagonal density per eigenvalue.
    Analytic { multiplicity: Vec<u64>, density: Vec<f64>, volume: f64, complete_below: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Eigenfunctions,
}

impl SpectralData {
    pub fn vectors(&self) -> Option<&Vec<Vec<f64>>> {
        match &self.eigenfunctions {
            Eigenfunctions::Grid { vectors, .. } => Some(vectors),
            _ => None,
        }
    }

    pub fn weight(&self) -> Option<&Vec<f64>> {
        match &self.eigenfunctions {
            Eigenfunctions::Grid { weight, .. } => Some(weight),
            _ => None,
        }
    }
}

/// The `count` smallest eigenpairs of `−Δ_h` by a dense symmetric eigensolve
/// of `W^{-1/2} S W^{-1/2}`.
pub fn spectrum(op: &LaplaceBeltrami, count: usize) -> Result<SpectralData> {
    let n = op.weight.len();
    if count == 0 || count > n {
        return Err(invalid(format!("count {count} outside 1..={n}")));
    }
    let s = op.stiffness.to_dense();
    let isq: Vec<f64> = op.weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| isq[i] * s[(i, j)] * isq[j]);
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(b, 1e-15, 0).ok_or_else(|| Error::Eigensolver("symmetric QR failed".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));
    let lam_max = eig.eigenvalues.amax().max(1.0);
    let mut eigenvalues = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let neg = op.matrix.clone();
    for &k in order.iter().take(count) {
        let lam = eig.eigenvalues[k];
        let mut v: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] * isq[i]).collect();
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * vmax) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let lv = neg.mul_vec(&v);
        let res: Vec<f64> = lv.iter().zip(&v).map(|(a, b)| -a - lam * b).collect();
        let r = weighted_dot(&op.weight, &res, &res).sqrt();
        if r > 1e-10 * lam_max {
            return Err(Error::Eigensolver(format!("eigenpair {k} residual {r:.3e}")));
        }
        eigenvalues.push(lam);
        vectors.push(v);
    }
    Ok(SpectralData { eigenvalues, eigenfunctions: Eigenfunctions::Grid { vectors, weight: op.weight.clone() } })
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn sphere_volume(dim: usize, radius: f64) -> f64 {
    let d = dim as f64;
    2.0 * PI.powf(0.5 * (d + 1.0)) / gamma_real(0.5 * (d + 1.0)) * radius.powf(d)
}

/// Closed-form spectra of flat tori and round spheres, grouped by eigenvalue.
pub fn analytic_spectrum(model: &RiemannianModel, cutoff: usize) -> Result<SpectralData> {
    match &model.kind {
        ModelKind::RoundSphere { dim, radius } => {
            let d = *dim as u64;
            let vol = sphere_volume(*dim, *radius);
            let mut ev = Vec::new();
            let mut mult = Vec::new();
            for k in 0..=cutoff as u64 {
                ev.push((k * (k + d - 1)) as f64 / (radius * radius));
                let m = binomial(k + d, d) - if k >= 2 { binomial(k + d - 2, d) } else { 0 };
                mult.push(m);
            }
            let k1 = cutoff as f64 + 1.0;
            let complete_below = k1 * (k1 + d as f64 - 1.0) / (radius * radius);
            let density = mult.iter().map(|&m| m as f64 / vol).collect();
            Ok(SpectralData {
                eigenvalues: ev,
                eigenfunctions: Eigenfunctions::Analytic { multiplicity: mult, density, volume: vol, complete_below },
            })
        }
        ModelKind::FlatTorus { periods } => {
            let d = periods.len();
            let vol: f64 = periods.iter().product();
            let c = cutoff as i64;
            let side = (2 * c + 1) as usize;
            let total = side.pow(d as u32);
            let scale: Vec<f64> = periods.iter().map(|l| (2.0 * PI / l).powi(2)).collect();
            let equal = periods.iter().all(|p| (p - periods[0]).abs() <= 1e-15 * p);
            let mut pairs: Vec<(f64, u64)> = Vec::new();
            if equal {
                let mut counts = vec![0u64; d * (c * c) as usize + 1];
                for flat in 0..total {
                    let mut f = flat;
                    let mut n2 = 0usize;
                    for _ in 0..d {
                        let k = (f % side) as i64 - c;
                        f /= side;
                        n2 += (k * k) as usize;
                    }
                    counts[n2] += 1;
                }
                for (n2, &m) in counts.iter().enumerate() {
                    if m > 0 {
                        pairs.push((n2 as f64 * scale[0], m));
                    }
                }
            } else {
                let mut vals: Vec<f64> = (0..total)
                    .map(|flat| {
                        let mut f = flat;
                        let mut s = 0.0;
                        for sc in &scale {
                            let k = (f % side) as i64 - c;
                            f /= side;
                            s += sc * (k * k) as f64;
                        }
                        s
                    })
                    .collect();
                vals.sort_by(f64::total_cmp);
                for v in vals {
                    match pairs.last_mut() {
                        Some(last) if (v - last.0).abs() <= 1e-12 * v.max(1.0) => last.1 += 1,
                        _ => pairs.push((v, 1)),
                    }
                }
            }
            let complete_below = scale.iter().map(|s| s * ((c + 1) * (c + 1)) as f64).fold(f64::INFINITY, f64::min);
            Ok(SpectralData {
                eigenvalues: pairs.iter().map(|p| p.0).collect(),
                eigenfunctions: Eigenfunctions::Analytic {
                    multiplicity: pairs.iter().map(|p| p.1).collect(),
                    density: pairs.iter().map(|p| p.1 as f64 / vol).collect(),
                    volume: vol,
                    complete_below,
                },
            })
        }
        ModelKind::GridMetric { .. } => Err(Error::Unsupported("analytic spectrum needs a torus or sphere".into())),
    }
}

/// Scalar curvature `R_h` at a point (chart coordinates for spheres).
pub fn scalar_curvature_spatial(model: &RiemannianModel, point: &[f64]) -> Result<f64> {
    if point.len() != model.dim {
        return Err(invalid("point dimension mismatch"));
    }
    match &model.kind {
        ModelKind::FlatTorus { .. } => Ok(0.0),
        ModelKind::RoundSphere { dim, radius } => Ok((dim * (dim - 1)) as f64 / (radius * radius)),
        ModelKind::GridMetric { grid, .. } => {
            if !grid.contains(point) {
                return Err(Error::Domain(format!("point {point:?} outside grid domain")));
            }
            Ok(curvature::scalar_curvature(model, point))
        }
    }
}
