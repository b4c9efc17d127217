//! Applying `(P − z)⁻¹` by two independent routes, plus the accretive square
//! root `A(z)` and the outgoing-condition residual.
//!
//! Time is discretized by the second difference `D²`. Per spatial mode the
//! exact lattice inverse of `D² + μ` is `g_m = C ρ^{|m|}` with
//! `ρ + 1/ρ = 2 − μΔt²`, `|ρ| < 1` and `C = Δt²/(ρ − 1/ρ)`; writing
//! `ρ = e^{−iŵΔt}` this is the lattice form of `(i/2w) e^{−iw|t|}`.

use crate::error::{invalid, Error, Result};
use crate::geometry::{weighted_dot, SpectralData};
use crate::grid::{divergence_form, SpatialGrid};
use crate::linalg::{self, CMat};
use crate::spacetime::{LorentzianMetric, StaticMetric};
use crate::curvature::MetricField;
use crate::sparse::Csr;
use crate::waveop::{perturbed_pair, DiscreteWaveOperator, SpacetimeGrid, TimeMode};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

pub type C64 = Complex64;

/// Smallest admissible `Im z` for handles.
pub const EPS_MIN: f64 = 0.1;
/// Dense spatial size cap for Schur-based routes.
pub const DENSE_CAP: usize = 2000;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Which time kernel a modal resolvent uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeKernel {
    /// Exact inverse of the lattice operator `D² + μ`.
    Discrete,
    /// Trapezoid rule applied to the continuum kernel `(i/2w) e^{−iw|t|}`.
    Continuum,
}

/// Per-mode time kernel `g_m = C ρ^{|m|}` and the outgoing generator.
#[derive(Debug, Clone, Copy)]
pub struct ModeKernel {
    pub mu: C64,
    pub rho: C64,
    pub scale: C64,
    /// `a` with `(D_t ± a) u = 0` on the outgoing sides.
    pub generator: C64,
}

pub fn mode_kernel(mu: C64, dt: f64, kind: TimeKernel) -> ModeKernel {
    match kind {
        TimeKernel::Discrete => {
            let b = 2.0 - mu * dt * dt;
            let s = (b * b * 0.25 - 1.0).sqrt();
            let (r1, r2) = (b * 0.5 + s, b * 0.5 - s);
            let big = if r1.norm() >= r2.norm() { r1 } else { r2 };
            let rho = 1.0 / big;
            let scale = dt * dt / (rho - big);
            ModeKernel { mu, rho, scale, generator: c(0.0, 1.0) * (rho - big) / (2.0 * dt) }
        }
        TimeKernel::Continuum => {
            let w = mu.sqrt();
            ModeKernel { mu, rho: (c(0.0, -1.0) * w * dt).exp(), scale: c(0.0, 0.5) * dt / w, generator: w }
        }
    }
}

/// Periodic image sum `Σ_j g_{m + jN}` for `m = 0..N`, images added until the
/// increment drops below `1e−14` of the running total.
pub fn periodic_kernel(k: &ModeKernel, n: usize) -> Vec<C64> {
    let rn = k.rho.powu(n as u32);
    let mut s = c(1.0, 0.0);
    let mut term = c(1.0, 0.0);
    for _ in 0..1_000_000 {
        term *= rn;
        s += term;
        if term.norm() < 1e-14 * s.norm() {
            break;
        }
    }
    (0..n).map(|m| k.scale * (k.rho.powu(m as u32) + k.rho.powu((n - m) as u32)) * s).collect()
}

/// `Σ_n g_{m−n} F_n` on the lattice window (`F = 0` outside), by two sweeps.
fn line_convolve(k: &ModeKernel, f: &mut [C64]) {
    let n = f.len();
    let mut fwd = vec![c(0.0, 0.0); n];
    let mut acc = c(0.0, 0.0);
    for m in 0..n {
        acc = acc * k.rho + f[m];
        fwd[m] = acc;
    }
    acc = c(0.0, 0.0);
    for m in (0..n).rev() {
        acc = acc * k.rho + f[m];
        let v = k.scale * (fwd[m] + acc - f[m]);
        f[m] = v;
    }
}

fn periodic_convolve(kern: &[C64], f: &mut [C64], planner: &mut FftPlanner<f64>) {
    let n = f.len();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut kh = kern.to_vec();
    fwd.process(&mut kh);
    fwd.process(f);
    for (a, b) in f.iter_mut().zip(&kh) {
        *a *= b / n as f64;
    }
    inv.process(f);
}

/// Static spatial part of `□_{g₀} = β⁻¹∂_t² + K`:
/// `K = W⁻¹ S` with `W = β^{1/2}|h|^{1/2}` · cell volume.
#[derive(Debug, Clone)]
pub struct StaticSpatialOperator {
    pub form: Csr,
    pub weight: Vec<f64>,
    pub beta: Vec<f64>,
    pub grid: SpatialGrid,
}

impl StaticSpatialOperator {
    pub fn new(bg: &StaticMetric, grid: &SpatialGrid) -> Result<Self> {
        let mut coeff = Vec::with_capacity(grid.len());
        let mut weight = Vec::with_capacity(grid.len());
        let mut beta = Vec::with_capacity(grid.len());
        for node in 0..grid.len() {
            let y = grid.coords(node);
            let h = bg.model.metric(&y);
            let b = bg.beta.eval(&y);
            if !(b > 0.0) {
                return Err(invalid(format!("beta not positive at {y:?}")));
            }
            let sq = (b * h.determinant()).sqrt();
            let inv = h.try_inverse().ok_or_else(|| invalid("singular spatial metric"))?;
            coeff.push(inv * sq);
            weight.push(sq * grid.cell_volume());
            beta.push(b);
        }
        Ok(StaticSpatialOperator { form: divergence_form(grid, &coeff), weight, beta, grid: grid.clone() })
    }

    /// `K_s = W^{-1/2} S W^{-1/2}` (symmetric).
    pub fn k_sym(&self) -> DMatrix<f64> {
        let s = self.form.to_dense();
        let n = self.weight.len();
        let m = DMatrix::from_fn(n, n, |i, j| s[(i, j)] / (self.weight[i] * self.weight[j]).sqrt());
        (&m + m.transpose()) * 0.5
    }

    /// `M(z) = β^{1/2} K_s β^{1/2} − zβ`.
    pub fn m_of_z(&self, z: C64) -> CMat {
        let k = self.k_sym();
        let n = k.nrows();
        CMat::from_fn(n, n, |i, j| {
            let v = c(k[(i, j)] * (self.beta[i] * self.beta[j]).sqrt(), 0.0);
            if i == j { v - z * self.beta[i] } else { v }
        })
    }

    /// `L(z) = i(β^{1/2} K_s β^{1/2} − zβ)`, m-accretive for `Im z > 0`.
    pub fn l_of_z(&self, z: C64) -> CMat {
        self.m_of_z(z) * c(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
enum Basis {
    Real { analysis: DMatrix<f64>, synthesis: DMatrix<f64>, coords: DMatrix<f64> },
    Complex { analysis: CMat, synthesis: CMat, coords: CMat },
}

fn real_times_complex(a: &DMatrix<f64>, x: &CMat) -> CMat {
    let re = a * x.map(|v| v.re);
    let im = a * x.map(|v| v.im);
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| c(re[(i, j)], im[(i, j)]))
}

/// Resolvent of the unperturbed operator applied mode by mode:
/// `u = synthesis · [g_j ∗ (analysis · f)_j]`.
#[derive(Debug, Clone)]
pub struct ModalResolvent {
    basis: Basis,
    pub kernels: Vec<ModeKernel>,
    pub z: C64,
    pub dt: f64,
    /// Time of the first slice.
    pub t0: f64,
    pub nt: usize,
    pub ns: usize,
    pub mode: TimeMode,
    pub weight: Vec<f64>,
    /// Squared weighted norm captured by the modes (per unit spatial field), for truncation checks.
    complete: bool,
}

impl ModalResolvent {
    /// Constant `β` route from grid eigen-data of `−Δ_h`; `μ_k = β(λ_k − z)`.
    pub fn from_spectrum(sp: &SpectralData, beta: f64, z: C64, grid: &SpacetimeGrid, kind: TimeKernel) -> Result<Self> {
        if !(z.im > 0.0) {
            return Err(invalid(format!("Im z must be positive (got {})", z.im)));
        }
        let (vecs, w) = match (sp.vectors(), sp.weight()) {
            (Some(v), Some(w)) => (v, w),
            _ => return Err(invalid("grid eigenvectors required")),
        };
        let ns = w.len();
        if ns != grid.ns() {
            return Err(invalid("spectral data does not match the spatial grid"));
        }
        let k = vecs.len();
        let synthesis = DMatrix::from_fn(ns, k, |i, j| vecs[j][i]);
        let coords = DMatrix::from_fn(k, ns, |j, i| vecs[j][i] * w[i]);
        let analysis = &coords * beta;
        let kernels = sp.eigenvalues.iter().map(|&l| mode_kernel((c(l, 0.0) - z) * beta, grid.dt(), kind)).collect();
        Ok(ModalResolvent {
            basis: Basis::Real { analysis, synthesis, coords },
            kernels,
            z,
            dt: grid.dt(),
            t0: grid.time(0),
            nt: grid.nt(),
            ns,
            mode: grid.mode,
            weight: w.clone(),
            complete: k == ns,
        })
    }

    /// General `β` route: `(P₀ − z)⁻¹ = β^{1/2}(D² + M)⁻¹β^{1/2}` in symmetrized
    /// coordinates, with `M(z) = A(z)²` diagonalized through its Schur form.
    pub fn from_static_operator(op: &StaticSpatialOperator, z: C64, grid: &SpacetimeGrid, kind: TimeKernel) -> Result<Self> {
        if !(z.im > 0.0) {
            return Err(invalid(format!("Im z must be positive (got {})", z.im)));
        }
        let ns = op.weight.len();
        if ns > DENSE_CAP {
            return Err(invalid(format!("dense size cap exceeded: {ns} > {DENSE_CAP}")));
        }
        let eig = linalg::eigen(&op.m_of_z(z))?;
        let sq_w: Vec<f64> = op.weight.iter().map(|w| w.sqrt()).collect();
        let sq_b: Vec<f64> = op.beta.iter().map(|b| b.sqrt()).collect();
        // f_nodal -> v-modal: V⁻¹ β^{1/2} W^{1/2} f
        let analysis = CMat::from_fn(ns, ns, |j, i| eig.inverse[(j, i)] * (sq_b[i] * sq_w[i]));
        let synthesis = CMat::from_fn(ns, ns, |i, j| eig.vectors[(i, j)] * (sq_b[i] / sq_w[i]));
        let coords = CMat::from_fn(ns, ns, |j, i| eig.inverse[(j, i)] * (sq_w[i] / sq_b[i]));
        let kernels = eig.values.iter().map(|&mu| mode_kernel(mu, grid.dt(), kind)).collect();
        Ok(ModalResolvent {
            basis: Basis::Complex { analysis, synthesis, coords },
            kernels,
            z,
            dt: grid.dt(),
            t0: grid.time(0),
            nt: grid.nt(),
            ns,
            mode: grid.mode,
            weight: op.weight.clone(),
            complete: true,
        })
    }

    fn to_modal(&self, f: &[C64], analysis_side: bool) -> CMat {
        let fm = CMat::from_column_slice(self.ns, self.nt, f);
        match &self.basis {
            Basis::Real { analysis, coords, .. } => real_times_complex(if analysis_side { analysis } else { coords }, &fm),
            Basis::Complex { analysis, coords, .. } => (if analysis_side { analysis } else { coords }) * fm,
        }
    }

    fn from_modal(&self, m: &CMat) -> Vec<C64> {
        let u = match &self.basis {
            Basis::Real { synthesis, .. } => real_times_complex(synthesis, m),
            Basis::Complex { synthesis, .. } => synthesis * m,
        };
        u.as_slice().to_vec()
    }

    /// Modal coordinates `c_j(t)` in which the outgoing condition is diagonal.
    pub fn modal_coordinates(&self, u: &[C64]) -> Result<CMat> {
        if !self.complete {
            return Err(invalid("modal coordinates need a complete eigenbasis"));
        }
        Ok(self.to_modal(u, false))
    }

    pub fn synthesize(&self, m: &CMat) -> Vec<C64> {
        self.from_modal(m)
    }

    /// Fraction of `‖f‖²_w` outside the retained modes.
    pub fn tail_fraction(&self, f: &[C64]) -> f64 {
        if self.complete {
            return 0.0;
        }
        let fm = self.to_modal(f, false);
        let captured: f64 = fm.iter().map(|v| v.norm_sqr()).sum();
        let total: f64 = (0..self.nt)
            .map(|t| (0..self.ns).map(|s| self.weight[s] * f[t * self.ns + s].norm_sqr()).sum::<f64>())
            .sum();
        ((total - captured) / total.max(1e-300)).max(0.0)
    }

    pub fn apply(&self, f: &[C64]) -> Result<Vec<C64>> {
        if f.len() != self.ns * self.nt {
            return Err(invalid("right-hand side size mismatch"));
        }
        let tail = self.tail_fraction(f);
        if tail > 1e-12 {
            return Err(invalid(format!("mode truncation insufficient: tail energy fraction {tail:.3e}")));
        }
        let mut fm = self.to_modal(f, true).transpose(); // nt × modes, columns contiguous per mode
        let nt = self.nt;
        let mode = self.mode;
        let kernels = &self.kernels;
        fm.as_mut_slice().par_chunks_mut(nt).zip(kernels.par_iter()).for_each_init(FftPlanner::new, |planner, (col, k)| {
            match mode {
                TimeMode::Line => line_convolve(k, col),
                TimeMode::Periodic => periodic_convolve(&periodic_kernel(k, nt), col, planner),
            }
        });
        Ok(self.from_modal(&fm.transpose()))
    }

    /// Column of the background resolvent for a unit source at spatial node
    /// `b`, time index 0, at time offsets `0..=span` (line windows only).
    fn unit_response(&self, b: usize, span: usize) -> Vec<Vec<C64>> {
        let nm = self.kernels.len();
        let a_col: Vec<C64> = match &self.basis {
            Basis::Real { analysis, .. } => (0..nm).map(|j| c(analysis[(j, b)], 0.0)).collect(),
            Basis::Complex { analysis, .. } => (0..nm).map(|j| analysis[(j, b)]).collect(),
        };
        (0..=span)
            .map(|m| {
                let gm = CMat::from_fn(nm, 1, |j, _| {
                    let k = &self.kernels[j];
                    k.scale * k.rho.powu(m as u32) * a_col[j]
                });
                self.from_modal(&gm)
            })
            .collect()
    }
}

/// Per-frequency spatial solves of the time-translation-invariant `P₀ − z`
/// on a periodic box: temporal DFT, then a cyclic tridiagonal (one spatial
/// dimension) or dense LU solve for each frequency.
#[derive(Debug, Clone)]
pub struct PeriodicBackground {
    nt: usize,
    ns: usize,
    tri: Option<Vec<[Vec<C64>; 3]>>,
    dense: Option<Vec<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>>,
}

impl PeriodicBackground {
    pub fn new(p0: &Csr, grid: &SpacetimeGrid, z: C64) -> Result<Self> {
        let (nt, ns) = (grid.nt(), grid.ns());
        let mut blocks: Vec<(isize, Vec<(usize, usize, f64)>)> = Vec::new();
        let signed = |it: usize| if it > nt / 2 { it as isize - nt as isize } else { it as isize };
        for is in 0..ns {
            for (col, v) in p0.row(is) {
                let d = signed(col / ns);
                match blocks.iter_mut().find(|b| b.0 == d) {
                    Some(b) => b.1.push((is, col % ns, v)),
                    None => blocks.push((d, vec![(is, col % ns, v)])),
                }
            }
        }
        // time-translation invariance of every slice
        let scale = p0.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for it in 1..nt {
            for is in 0..ns {
                for (col, v) in p0.row(it * ns + is) {
                    let d = signed((col / ns + nt - it) % nt);
                    let want = blocks
                        .iter()
                        .find(|b| b.0 == d)
                        .and_then(|b| b.1.iter().find(|e| e.0 == is && e.1 == col % ns))
                        .map(|e| e.2)
                        .unwrap_or(0.0);
                    if (v - want).abs() > 1e-12 * scale {
                        return Err(invalid("background operator is not time-translation invariant"));
                    }
                }
            }
        }
        let spatial_tri = grid.spatial.dim() == 1
            && ns >= 3
            && blocks.iter().all(|b| b.1.iter().all(|&(i, j, _)| (j + ns - i) % ns <= 1 || (i + ns - j) % ns <= 1));
        let mat_q = |q: usize| -> Vec<(usize, usize, C64)> {
            let mut out = Vec::new();
            for (d, entries) in &blocks {
                let ph = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (q as f64) * (*d as f64) / nt as f64);
                for &(i, j, v) in entries {
                    out.push((i, j, ph * v));
                }
            }
            for i in 0..ns {
                out.push((i, i, -z));
            }
            out
        };
        if spatial_tri {
            let tri = (0..nt)
                .map(|q| {
                    let mut lo = vec![c(0.0, 0.0); ns];
                    let mut di = vec![c(0.0, 0.0); ns];
                    let mut up = vec![c(0.0, 0.0); ns];
                    for (i, j, v) in mat_q(q) {
                        if j == i {
                            di[i] += v;
                        } else if j == (i + ns - 1) % ns {
                            lo[i] += v;
                        } else {
                            up[i] += v;
                        }
                    }
                    [lo, di, up]
                })
                .collect();
            Ok(PeriodicBackground { nt, ns, tri: Some(tri), dense: None })
        } else {
            if ns > 400 {
                return Err(Error::Unsupported(format!(
                    "periodic direct background needs one spatial dimension or at most 400 spatial nodes (got {ns})"
                )));
            }
            let dense = (0..nt)
                .map(|q| {
                    let mut m = CMat::zeros(ns, ns);
                    for (i, j, v) in mat_q(q) {
                        m[(i, j)] += v;
                    }
                    m.lu()
                })
                .collect();
            Ok(PeriodicBackground { nt, ns, tri: None, dense: Some(dense) })
        }
    }

    fn solve_q(&self, q: usize, b: &[C64]) -> Vec<C64> {
        if let Some(tri) = &self.tri {
            let [lo, di, up] = &tri[q];
            linalg::solve_cyclic_tridiagonal(lo, di, up, b)
        } else {
            let lu = &self.dense.as_ref().unwrap()[q];
            lu.solve(&CMat::from_column_slice(self.ns, 1, b)).expect("singular frequency block").as_slice().to_vec()
        }
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let (nt, ns) = (self.nt, self.ns);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        // per spatial node time series
        let mut series = vec![c(0.0, 0.0); nt * ns];
        for is in 0..ns {
            let s = &mut series[is * nt..(is + 1) * nt];
            for it in 0..nt {
                s[it] = f[it * ns + is];
            }
            fwd.process(s);
        }
        let solved: Vec<Vec<C64>> = (0..nt)
            .into_par_iter()
            .map(|q| {
                let b: Vec<C64> = (0..ns).map(|is| series[is * nt + q]).collect();
                self.solve_q(q, &b)
            })
            .collect();
        let mut out = vec![c(0.0, 0.0); nt * ns];
        let mut buf = vec![c(0.0, 0.0); nt];
        for is in 0..ns {
            for q in 0..nt {
                buf[q] = solved[q][is];
            }
            inv.process(&mut buf);
            for it in 0..nt {
                out[it * ns + is] = buf[it] / nt as f64;
            }
        }
        out
    }

    /// Response to a unit source at (time 0, spatial node `b`), all times.
    fn unit_response(&self, b: usize) -> Vec<Vec<C64>> {
        let (nt, ns) = (self.nt, self.ns);
        let mut e = vec![c(0.0, 0.0); ns];
        e[b] = c(1.0, 0.0);
        let sol: Vec<Vec<C64>> = (0..nt).into_par_iter().map(|q| self.solve_q(q, &e)).collect();
        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(nt);
        let mut out = vec![vec![c(0.0, 0.0); ns]; nt];
        let mut buf = vec![c(0.0, 0.0); nt];
        for is in 0..ns {
            for q in 0..nt {
                buf[q] = sol[q][is];
            }
            inv.process(&mut buf);
            for it in 0..nt {
                out[it][is] = buf[it] / nt as f64;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum Background {
    Periodic(PeriodicBackground),
    Modal(ModalResolvent),
}

impl Background {
    pub fn apply(&self, f: &[C64]) -> Result<Vec<C64>> {
        match self {
            Background::Periodic(p) => Ok(p.apply(f)),
            Background::Modal(m) => m.apply(f),
        }
    }
}

/// Direct route: background solve plus a capacitance (Woodbury) correction
/// for the compactly supported `V = P − P₀`.
#[derive(Debug, Clone)]
pub struct DirectResolvent {
    pub z: C64,
    pub p: DiscreteWaveOperator,
    pub background: Background,
    rows: Vec<usize>,
    cols: Vec<usize>,
    v_rc: Vec<Vec<(usize, f64)>>,
    capacitance: Option<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>>,
    pub residual_tol: f64,
}

impl DirectResolvent {
    pub fn new(g: &LorentzianMetric, grid: &SpacetimeGrid, z: C64) -> Result<Self> {
        if z.im < EPS_MIN {
            return Err(invalid(format!("Im z = {} below the minimum {EPS_MIN}", z.im)));
        }
        let (p, p0) = perturbed_pair(g, grid)?;
        let background = match grid.mode {
            TimeMode::Periodic => Background::Periodic(PeriodicBackground::new(&p0.matrix, grid, z)?),
            TimeMode::Line => {
                let op = StaticSpatialOperator::new(&g.background, &grid.spatial)?;
                Background::Modal(if g.background.beta.is_constant() {
                    let sp = crate::geometry::spectrum(
                        &crate::geometry::LaplaceBeltrami {
                            grid: grid.spatial.clone(),
                            matrix: op.form.scale_rows(&op.weight.iter().map(|w| -1.0 / w).collect::<Vec<_>>()),
                            stiffness: op.form.clone(),
                            weight: op.weight.clone(),
                        },
                        grid.ns(),
                    )?;
                    ModalResolvent::from_spectrum(&sp, op.beta[0], z, grid, TimeKernel::Discrete)?
                } else {
                    ModalResolvent::from_static_operator(&op, z, grid, TimeKernel::Discrete)?
                })
            }
        };
        let v = p.matrix.sub(&p0.matrix);
        let rows: Vec<usize> = (0..v.nrows).filter(|&r| v.indptr[r + 1] > v.indptr[r]).collect();
        let mut cols: Vec<usize> = v.indices.clone();
        cols.sort_unstable();
        cols.dedup();
        let col_pos = |j: usize| cols.binary_search(&j).unwrap();
        let v_rc: Vec<Vec<(usize, f64)>> = rows.iter().map(|&r| v.row(r).map(|(j, x)| (col_pos(j), x)).collect()).collect();
        let mut out = DirectResolvent { z, p, background, rows, cols, v_rc, capacitance: None, residual_tol: 1e-10 };
        if !out.rows.is_empty() {
            let g_cr = out.coupling_block(grid)?;
            let nr = out.rows.len();
            let mut k = CMat::identity(nr, nr);
            for (a, vr) in out.v_rc.iter().enumerate() {
                for &(ci, x) in vr {
                    for b in 0..nr {
                        k[(a, b)] += g_cr[(ci, b)] * x;
                    }
                }
            }
            out.capacitance = Some(k.lu());
        }
        Ok(out)
    }

    /// `G_{CR}`: background resolvent entries from footprint rows to columns.
    fn coupling_block(&self, grid: &SpacetimeGrid) -> Result<CMat> {
        let (nt, ns) = (grid.nt(), grid.ns());
        let mut spatial: Vec<usize> = self.rows.iter().map(|r| r % ns).collect();
        spatial.sort_unstable();
        spatial.dedup();
        let tmin = self.rows.iter().chain(&self.cols).map(|r| r / ns).min().unwrap();
        let tmax = self.rows.iter().chain(&self.cols).map(|r| r / ns).max().unwrap();
        let span = tmax - tmin;
        let mut g = CMat::zeros(self.cols.len(), self.rows.len());
        for &b in &spatial {
            let table: Vec<Vec<C64>> = match &self.background {
                Background::Periodic(pb) => pb.unit_response(b),
                Background::Modal(m) => m.unit_response(b, span),
            };
            for (rb, &r) in self.rows.iter().enumerate() {
                if r % ns != b {
                    continue;
                }
                let tr = r / ns;
                for (ca, &cidx) in self.cols.iter().enumerate() {
                    let tc = cidx / ns;
                    let val = match grid.mode {
                        TimeMode::Periodic => table[(tc + nt - tr) % nt][cidx % ns],
                        TimeMode::Line => table[tc.abs_diff(tr)][cidx % ns],
                    };
                    g[(ca, rb)] = val;
                }
            }
        }
        Ok(g)
    }

    /// Solves `(P − z)u = f` without the residual gate.
    pub fn solve_unchecked(&self, f: &[C64]) -> Result<Vec<C64>> {
        let u0 = self.background.apply(f)?;
        let Some(lu) = &self.capacitance else { return Ok(u0) };
        let rhs = CMat::from_fn(self.rows.len(), 1, |a, _| {
            self.v_rc[a].iter().fold(c(0.0, 0.0), |s, &(ci, x)| s + u0[self.cols[ci]] * x)
        });
        let q = lu.solve(&rhs).ok_or_else(|| Error::Solver("singular capacitance matrix".into()))?;
        let mut f2 = f.to_vec();
        for (a, &r) in self.rows.iter().enumerate() {
            f2[r] -= q[a];
        }
        self.background.apply(&f2)
    }

    /// Relative weighted residual `‖(P − z)u − f‖_w / ‖f‖_w` over rows whose
    /// stencil lies inside the grid (all rows on periodic boxes).
    pub fn residual(&self, u: &[C64], f: &[C64]) -> f64 {
        let pu = self.p.matrix.mul_cvec(u);
        let grid = &self.p.grid;
        let ns = grid.ns();
        let interior = |r: usize| grid.mode == TimeMode::Periodic || (r / ns > 0 && r / ns + 1 < grid.nt());
        let mut num = 0.0;
        let mut den = 0.0;
        for r in 0..u.len() {
            if !interior(r) {
                continue;
            }
            let w = self.p.weight[r];
            num += w * (pu[r] - self.z * u[r] - f[r]).norm_sqr();
            den += w * f[r].norm_sqr();
        }
        (num / den.max(1e-300)).sqrt()
    }

    pub fn footprint_size(&self) -> usize {
        self.rows.len()
    }
}

/// Solves `(P − z)u = f` and enforces the residual target.
pub fn direct_resolvent_apply(r: &DirectResolvent, f: &[C64]) -> Result<Vec<C64>> {
    let u = r.solve_unchecked(f)?;
    let res = r.residual(&u, f);
    if !(res <= r.residual_tol) {
        return Err(Error::Residual { achieved: res, required: r.residual_tol });
    }
    Ok(u)
}

/// Mode-sum route for `β = 1`: expand in spatial eigenmodes, convolve each
/// with its time kernel, reassemble.
pub fn static_resolvent_apply(
    spectral: &SpectralData,
    z: C64,
    f: &[C64],
    grid: &SpacetimeGrid,
    kind: TimeKernel,
) -> Result<Vec<C64>> {
    ModalResolvent::from_spectrum(spectral, 1.0, z, grid, kind)?.apply(f)
}

/// Lemma-style general static route through `A(z)`.
pub fn general_static_resolvent_apply(
    op: &StaticSpatialOperator,
    z: C64,
    f: &[C64],
    grid: &SpacetimeGrid,
    kind: TimeKernel,
) -> Result<Vec<C64>> {
    ModalResolvent::from_static_operator(op, z, grid, kind)?.apply(f)
}

/// Handle over either route.
#[derive(Debug, Clone)]
pub enum ResolventHandle {
    Spectral(ModalResolvent),
    Direct(Box<DirectResolvent>),
}

impl ResolventHandle {
    pub fn z(&self) -> C64 {
        match self {
            ResolventHandle::Spectral(m) => m.z,
            ResolventHandle::Direct(d) => d.z,
        }
    }

    pub fn apply(&self, f: &[C64]) -> Result<Vec<C64>> {
        match self {
            ResolventHandle::Spectral(m) => m.apply(f),
            ResolventHandle::Direct(d) => direct_resolvent_apply(d, f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AccretiveRoot {
    pub a: CMat,
    pub z: C64,
    /// `min Re⟨u, L u⟩ / ‖u‖²` over the sampled vectors.
    pub margin: f64,
    /// `‖A² − e^{−iπ/2} L‖ / ‖L‖`.
    pub square_defect: f64,
    pub min_singular: f64,
}

/// `A(z) = e^{−iπ/4} L^{1/2}` with `L^{1/2}` the principal (accretive) root.
pub fn accretive_sqrt(l: &CMat, z: C64, trials: usize, seed: u64) -> Result<AccretiveRoot> {
    if l.nrows() > DENSE_CAP {
        return Err(invalid("dense size cap exceeded"));
    }
    let r = linalg::sqrtm(l)?;
    let a = r * C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let target = l * c(0.0, -1.0);
    let square_defect = (&a * &a - &target).norm() / l.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = l.nrows();
    let mut margin = f64::INFINITY;
    for _ in 0..trials {
        let u = CMat::from_fn(n, 1, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let q = (u.adjoint() * l * &u)[(0, 0)].re / u.norm_squared();
        margin = margin.min(q);
    }
    if margin < 0.0 {
        return Err(Error::Solver(format!("L(z) not accretive on a sample: margin {margin:.3e}")));
    }
    let sv = a.clone().singular_values();
    let min_singular = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AccretiveRoot { a, z, margin, square_defect, min_singular })
}

/// Which side of the time axis an outgoing condition is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    /// `t > T_out`, condition `(D_t + A)u = 0`.
    Future,
    /// `t < −T_out`, condition `(D_t − A)u = 0`.
    Past,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutgoingProfile {
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
}

impl OutgoingProfile {
    pub fn max_beyond(&self, t_out: f64, side: Side) -> f64 {
        self.times
            .iter()
            .zip(&self.residual)
            .filter(|(t, _)| match side {
                Side::Future => **t > t_out,
                Side::Past => **t < -t_out,
            })
            .map(|(_, r)| *r)
            .fold(0.0, f64::max)
    }

    pub fn min_beyond(&self, t_out: f64, side: Side) -> f64 {
        self.times
            .iter()
            .zip(&self.residual)
            .filter(|(t, _)| match side {
                Side::Future => **t > t_out,
                Side::Past => **t < -t_out,
            })
            .map(|(_, r)| *r)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `t ↦ ‖(D_t ± A)u(t)‖_w / ‖u(t)‖_w` with `D_t = −i∂_t` by centered
/// differences. `sign = +1` applies `D_t + A`; the generator of `modal` sets `A`.
pub fn outgoing_residual(u: &[C64], modal: &ModalResolvent, sign: f64) -> Result<OutgoingProfile> {
    let (nt, ns, dt) = (modal.nt, modal.ns, modal.dt);
    let spec = modal.kernels.iter().map(|k| k.mu.sqrt().norm()).fold(0.0, f64::max);
    if spec * dt > std::f64::consts::PI {
        return Err(invalid(format!("time step under-resolves |A(z)|: |A|Δt = {:.2}", spec * dt)));
    }
    let cm = modal.modal_coordinates(u)?;
    let nm = modal.kernels.len();
    let mut times = Vec::new();
    let mut residual = Vec::new();
    for m in 1..nt - 1 {
        let r = CMat::from_fn(nm, 1, |j, _| {
            let d = (cm[(j, m + 1)] - cm[(j, m - 1)]) / (2.0 * dt) * c(0.0, -1.0);
            d + modal.kernels[j].generator * cm[(j, m)] * sign
        });
        let rn = modal.synthesize(&r);
        let un = &u[m * ns..(m + 1) * ns];
        let wr: f64 = rn.iter().zip(&modal.weight).map(|(v, w)| w * v.norm_sqr()).sum();
        let wu: f64 = un.iter().zip(&modal.weight).map(|(v, w)| w * v.norm_sqr()).sum();
        times.push(modal.t0 + modal.dt * m as f64);
        residual.push((wr / wu.max(1e-300)).sqrt());
    }
    Ok(OutgoingProfile { times, residual })
}

/// Weighted norm on a space-time grid.
pub fn weighted_norm(weight: &[f64], u: &[C64]) -> f64 {
    weight.iter().zip(u).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_weighted_norm(weight: &[f64], u: &[f64]) -> f64 {
    weighted_dot(weight, u, u).sqrt()
}
