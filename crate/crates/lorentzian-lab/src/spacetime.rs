//! Static backgrounds `g₀ = β(y) dt² − h`, compactly supported perturbations
//! and the causal relation.
//!
//! With this form `g^{tt} = 1/β`, light cones obey `|dy|_h = √β |dt|`, and the
//! optical metric governing the static causal relation is `σ = h/β`.

use crate::curvature::{self, MetricField};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ModelKind, RiemannianModel};
use crate::grid::SpatialGrid;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Lapse-type function `β` on `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BetaField {
    Constant(f64),
    /// `mean + amplitude · cos(wavenumber · y[axis])`
    Cosine { mean: f64, amplitude: f64, wavenumber: f64, axis: usize },
}

impl BetaField {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            BetaField::Constant(b) => *b,
            BetaField::Cosine { mean, amplitude, wavenumber, axis } => mean + amplitude * (wavenumber * y[*axis]).cos(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, BetaField::Constant(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticMetric {
    pub beta: BetaField,
    pub model: RiemannianModel,
}

impl StaticMetric {
    pub fn new(beta: BetaField, model: RiemannianModel) -> Self {
        StaticMetric { beta, model }
    }

    pub fn ultrastatic(model: RiemannianModel) -> Self {
        StaticMetric { beta: BetaField::Constant(1.0), model }
    }

    pub fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let y = &x[1..];
        let d = self.model.dim;
        let h = self.model.metric(y);
        let mut g = DMatrix::zeros(d + 1, d + 1);
        g[(0, 0)] = self.beta.eval(y);
        for i in 0..d {
            for j in 0..d {
                g[(i + 1, j + 1)] = -h[(i, j)];
            }
        }
        g
    }
}

/// Smooth compactly supported bump `exp(1 − 1/(1 − r²))`, equal to 1 at `r = 0`.
pub fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// `δg = amplitude · bump(x) · components`, with `bump` an ellipsoidal bump
/// of semi-axes `half_widths` about `center` (space-time coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
    pub amplitude: f64,
    /// Symmetric `n × n` pattern, row-major.
    pub components: Vec<f64>,
}

impl Perturbation {
    /// Bump in the `g_{tt}` component only.
    pub fn tt_bump(center: &[f64], half_widths: &[f64], amplitude: f64) -> Self {
        let n = center.len();
        let mut components = vec![0.0; n * n];
        components[0] = 1.0;
        Perturbation { center: center.to_vec(), half_widths: half_widths.to_vec(), amplitude, components }
    }

    pub fn profile(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .zip(&self.half_widths)
            .map(|((x, c), w)| ((x - c) / w).powi(2))
            .sum();
        bump(r2)
    }

    /// `T` such that `δg` vanishes for `|t| ≥ T`.
    pub fn support_time_bound(&self) -> f64 {
        self.center[0].abs() + self.half_widths[0]
    }

    pub fn delta(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let b = self.profile(x);
        if b == 0.0 {
            return None;
        }
        let n = self.center.len();
        Some(DMatrix::from_row_slice(n, n, &self.components) * (self.amplitude * b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianMetric {
    pub background: StaticMetric,
    pub perturbation: Option<Perturbation>,
    pub n: usize,
}

/// Metric data at one point.
#[derive(Debug, Clone)]
pub struct MetricAt {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub abs_det: f64,
}

impl LorentzianMetric {
    pub fn new(background: StaticMetric, perturbation: Option<Perturbation>) -> Result<Self> {
        let n = background.model.dim + 1;
        if let Some(p) = &perturbation {
            if p.center.len() != n || p.half_widths.len() != n || p.components.len() != n * n {
                return Err(invalid("perturbation shape does not match space-time dimension"));
            }
            if p.half_widths.iter().any(|w| !(*w > 0.0)) {
                return Err(invalid("perturbation half widths must be positive"));
            }
            let c = DMatrix::from_row_slice(n, n, &p.components);
            if (&c - c.transpose()).amax() > 0.0 {
                return Err(invalid("perturbation components must be symmetric"));
            }
        }
        Ok(LorentzianMetric { background, perturbation, n })
    }

    pub fn minkowski(spatial_dim: usize, period: f64) -> Result<Self> {
        LorentzianMetric::new(
            StaticMetric::ultrastatic(RiemannianModel::flat_torus(&vec![period; spatial_dim])?),
            None,
        )
    }

    pub fn background_metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.background.metric(x)
    }

    pub fn components(&self, x: &[f64]) -> DMatrix<f64> {
        let mut g = self.background.metric(x);
        if let Some(d) = self.perturbation.as_ref().and_then(|p| p.delta(x)) {
            g += d;
        }
        g
    }

    /// Components, inverse and `|det g|`, with a Lorentzian signature check.
    pub fn metric_at(&self, x: &[f64]) -> Result<MetricAt> {
        let g = self.components(x);
        if !is_lorentzian(&g) {
            return Err(Error::Signature { node: vec![], coords: x.to_vec() });
        }
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::Signature { node: vec![], coords: x.to_vec() })?;
        let defect = (&g * &ginv - DMatrix::identity(self.n, self.n)).amax();
        if defect > 1e-12 {
            return Err(Error::Solver(format!("metric inverse defect {defect:.3e} at {x:?}")));
        }
        Ok(MetricAt { abs_det: g.determinant().abs(), g, ginv })
    }

    pub fn is_perturbed_at(&self, x: &[f64]) -> bool {
        self.perturbation.as_ref().is_some_and(|p| p.profile(x) > 0.0)
    }
}

impl MetricField for LorentzianMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.components(x)
    }
    fn fd_step(&self) -> f64 {
        let base = self.background.model.fd_step();
        match &self.perturbation {
            Some(p) => base.min(0.01 * p.half_widths.iter().cloned().fold(f64::INFINITY, f64::min)),
            None => base,
        }
    }
}

fn is_lorentzian(g: &DMatrix<f64>) -> bool {
    let e = SymmetricEigen::new(g.clone()).eigenvalues;
    e.iter().filter(|v| **v > 0.0).count() == 1 && e.iter().filter(|v| **v < 0.0).count() == g.nrows() - 1
}

/// Outcome of the checkable parts of the standing hypotheses.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Space-time nodes where `g − g₀ ≠ 0`.
    pub support_nodes: Vec<usize>,
    pub support_time_range: Option<(f64, f64)>,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Largest `C` with `C < β < 1/C` (up to equality).
    pub beta_constant: f64,
    /// Smallest `|eigenvalue|` of `g` in a background orthonormal frame.
    pub signature_margin: f64,
    pub violations: Vec<String>,
    pub by_construction: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans a space-time grid (axis 0 = time) for support, `β` bounds and signature.
pub fn validate_hypothesis(g: &LorentzianMetric, grid: &SpatialGrid) -> HypothesisReport {
    let mut support = Vec::new();
    let mut trange: Option<(f64, f64)> = None;
    let mut bmin = f64::INFINITY;
    let mut bmax = f64::NEG_INFINITY;
    let mut margin = f64::INFINITY;
    let mut violations = Vec::new();
    for node in 0..grid.len() {
        let x = grid.coords(node);
        let b = g.background.beta.eval(&x[1..]);
        bmin = bmin.min(b);
        bmax = bmax.max(b);
        let full = g.components(&x);
        let g0 = g.background_metric(&x);
        if full != g0 {
            support.push(node);
            trange = Some(match trange {
                None => (x[0], x[0]),
                Some((lo, hi)) => (lo.min(x[0]), hi.max(x[0])),
            });
        }
        // orthonormal frame of the background: g₀ = F^T diag(1,-1,..) F
        let e0 = SymmetricEigen::new(g0);
        let scale = e0.eigenvalues.map(|v| 1.0 / v.abs().sqrt());
        let frame = &e0.eigenvectors * DMatrix::from_diagonal(&scale);
        let gh = frame.transpose() * &full * &frame;
        let eig = SymmetricEigen::new(gh).eigenvalues;
        let pos = eig.iter().filter(|v| **v > 0.0).count();
        let m = eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        margin = margin.min(m);
        if pos != 1 || m < 0.1 {
            violations.push(format!(
                "signature {} at node {:?} x = {:?} (frame eigenvalues {:?})",
                if pos != 1 { "not Lorentzian" } else { "margin below 0.1" },
                grid.multi_index(node),
                x,
                eig.as_slice()
            ));
        }
    }
    if !(bmin > 0.0) {
        violations.push(format!("beta not positive (min {bmin})"));
    }
    HypothesisReport {
        support_nodes: support,
        support_time_range: trange,
        beta_min: bmin,
        beta_max: bmax,
        beta_constant: bmin.min(1.0 / bmax),
        signature_margin: margin,
        violations,
        by_construction: vec![
            "completeness of (Y,h): Y is a closed manifold (periodic grid or analytic torus/sphere)".into(),
            "global hyperbolicity: static background on closed Y with signature margin >= 0.1 enforced as proxy".into(),
        ],
    }
}

/// Scalar curvature of the space-time metric (4th-order differences).
pub fn lorentzian_scalar_curvature(g: &LorentzianMetric, x: &[f64]) -> Result<f64> {
    if x.len() != g.n {
        return Err(invalid("point dimension mismatch"));
    }
    if let ModelKind::GridMetric { grid, .. } = &g.background.model.kind {
        let h = 2.0 * g.fd_step();
        let inside = (0..grid.dim()).all(|a| grid.periodic[a] || {
            let lo = grid.origin[a] + 4.0 * grid.spacing[a];
            let hi = grid.origin[a] + (grid.nodes[a] - 5) as f64 * grid.spacing[a];
            x[a + 1] - h >= lo && x[a + 1] + h <= hi
        });
        if !inside {
            return Err(Error::Domain("curvature stencil exits the grid".into()));
        }
    }
    Ok(curvature::scalar_curvature(g, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CausalRelation {
    /// `x1 ∈ J₋(x2)`
    Past,
    /// `x1 ∈ J₊(x2)`
    Future,
    /// `x1 = x2`, in both.
    Coincident,
    Unrelated,
}

fn wrapped_delta(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..grid.dim())
        .map(|k| {
            let mut d = b[k] - a[k];
            if grid.periodic[k] {
                let l = grid.extent(k);
                d -= l * (d / l).round();
            }
            d
        })
        .collect()
}

fn optical(g: &StaticMetric, y: &[f64]) -> DMatrix<f64> {
    g.model.metric(y) / g.beta.eval(y)
}

fn seg_len(s: &DMatrix<f64>, d: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(d);
    (v.transpose() * s * &v)[(0, 0)].max(0.0).sqrt()
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

fn cell_corners(grid: &SpatialGrid, y: &[f64]) -> Vec<usize> {
    let d = grid.dim();
    let base: Vec<isize> = (0..d).map(|a| ((y[a] - grid.origin[a]) / grid.spacing[a]).floor() as isize).collect();
    let mut out = Vec::new();
    for mask in 0..(1usize << d) {
        let mut idx = vec![0usize; d];
        let mut ok = true;
        for a in 0..d {
            let n = grid.nodes[a] as isize;
            let j = base[a] + ((mask >> a) & 1) as isize;
            idx[a] = if grid.periodic[a] {
                j.rem_euclid(n) as usize
            } else if (0..n).contains(&j) {
                j as usize
            } else {
                ok = false;
                0
            };
        }
        if ok {
            out.push(grid.flat_index(&idx));
        }
    }
    out
}

/// Optical distance `d_σ(y1, y2)` by Dijkstra over the grid graph with all
/// `3^d − 1` neighbour offsets (exact for one spatial dimension).
pub fn optical_distance(g: &StaticMetric, grid: &SpatialGrid, y1: &[f64], y2: &[f64]) -> f64 {
    let d = grid.dim();
    let n = grid.len();
    let sig: Vec<DMatrix<f64>> = (0..n).map(|k| optical(g, &grid.coords(k))).collect();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    let s2 = optical(g, y2);
    for c in cell_corners(grid, y2) {
        let dl = wrapped_delta(grid, y2, &grid.coords(c));
        let l = seg_len(&((&s2 + &sig[c]) * 0.5), &dl);
        if l < dist[c] {
            dist[c] = l;
            heap.push(Item(l, c));
        }
    }
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|m| (0..d).map(|a| ((m / 3usize.pow(a as u32)) % 3) as isize - 1).collect::<Vec<_>>())
        .filter(|o: &Vec<isize>| o.iter().any(|&v| v != 0))
        .collect();
    while let Some(Item(du, u)) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        let iu = grid.multi_index(u);
        for off in &offsets {
            let mut iv = iu.clone();
            let mut ok = true;
            for a in 0..d {
                let nn = grid.nodes[a] as isize;
                let j = iu[a] as isize + off[a];
                iv[a] = if grid.periodic[a] {
                    j.rem_euclid(nn) as usize
                } else if (0..nn).contains(&j) {
                    j as usize
                } else {
                    ok = false;
                    0
                };
            }
            if !ok {
                continue;
            }
            let v = grid.flat_index(&iv);
            let step: Vec<f64> = (0..d).map(|a| off[a] as f64 * grid.spacing[a]).collect();
            let l = du + seg_len(&((&sig[u] + &sig[v]) * 0.5), &step);
            if l < dist[v] {
                dist[v] = l;
                heap.push(Item(l, v));
            }
        }
    }
    let s1 = optical(g, y1);
    let mut best = f64::INFINITY;
    for c in cell_corners(grid, y1) {
        let dl = wrapped_delta(grid, &grid.coords(c), y1);
        best = best.min(dist[c] + seg_len(&((&s1 + &sig[c]) * 0.5), &dl));
    }
    // same cell: the straight segment competes
    let direct = wrapped_delta(grid, y2, y1);
    if direct.iter().zip(&grid.spacing).all(|(d, h)| d.abs() <= *h) {
        best = best.min(seg_len(&((&s1 + &s2) * 0.5), &direct));
    }
    best
}

/// Causal relation of `x1` to `x2`.
///
/// Static metrics use `±(t2 − t1) ≥ d_σ(y1, y2)`; perturbed metrics are
/// supported in 1+1 dimensions by integrating the two null directions from
/// `x2` to the time of `x1`, with a one-cell tolerance.
pub fn causal_relation(x1: &[f64], x2: &[f64], g: &LorentzianMetric, grid: &SpatialGrid) -> Result<CausalRelation> {
    if x1.len() != g.n || x2.len() != g.n || grid.dim() + 1 != g.n {
        return Err(invalid("dimension mismatch in causal_relation"));
    }
    if x1 == x2 {
        return Ok(CausalRelation::Coincident);
    }
    let dt = x2[0] - x1[0];
    match &g.perturbation {
        None => {
            let d = optical_distance(&g.background, grid, &x1[1..], &x2[1..]);
            let tol = 1e-12 * (1.0 + d);
            Ok(if dt >= d - tol {
                CausalRelation::Past
            } else if -dt >= d - tol {
                CausalRelation::Future
            } else {
                CausalRelation::Unrelated
            })
        }
        Some(_) if g.n == 2 => {
            let (ya, yb) = null_curves_1p1(g, x2, x1[0]);
            let cell = grid.spacing[0];
            let (lo, hi) = (ya.min(yb) - cell, ya.max(yb) + cell);
            let l = grid.extent(0);
            let inside = [-1.0, 0.0, 1.0].iter().any(|k| {
                let y = x1[1] + k * l;
                y >= lo && y <= hi
            });
            Ok(if !inside {
                CausalRelation::Unrelated
            } else if dt >= 0.0 {
                CausalRelation::Past
            } else {
                CausalRelation::Future
            })
        }
        Some(_) => Err(Error::Unsupported("causal relation for perturbed metrics needs 1+1 dimensions".into())),
    }
}

/// Slopes `dy/dt` of the two null directions of a 1+1 metric.
pub fn null_slopes(g: &DMatrix<f64>) -> (f64, f64) {
    let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let disc = (b * b - a * c).max(0.0).sqrt();
    ((-b + disc) / c, (-b - disc) / c)
}

/// Integrates both null curves from `x2` to time `t1` (RK4); returns their `y` values.
pub fn null_curves_1p1(g: &LorentzianMetric, x2: &[f64], t1: f64) -> (f64, f64) {
    let span = t1 - x2[0];
    let steps = ((span.abs() / 2e-3).ceil() as usize).max(64);
    let h = span / steps as f64;
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let f = |t: f64, y: f64| {
            let s = null_slopes(&g.components(&[t, y]));
            if k == 0 { s.0 } else { s.1 }
        };
        let (mut t, mut y) = (x2[0], x2[1]);
        for _ in 0..steps {
            let k1 = f(t, y);
            let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = f(t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        *o = y;
    }
    (out[0], out[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, l: f64) -> SpatialGrid {
        SpatialGrid::periodic_box(&[n], &[l], &[-0.5 * l]).unwrap()
    }

    #[test]
    fn minkowski_components() {
        let g = LorentzianMetric::minkowski(2, 4.0).unwrap();
        let m = g.metric_at(&[0.3, 1.0, -0.2]).unwrap();
        assert_eq!(m.g, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0])));
        assert_eq!(m.abs_det, 1.0);
    }

    #[test]
    fn outside_support_is_bitwise_background() {
        let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[8.0]).unwrap());
        let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 0.5], 0.1))).unwrap();
        let x = [1.0, 0.2];
        assert_eq!(g.components(&x), g.background_metric(&x));
    }

    #[test]
    fn determinant_matches_direct_product_formula() {
        let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[8.0]).unwrap());
        let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.0], 0.1))).unwrap();
        let x = [0.2, -0.3];
        let m = g.metric_at(&x).unwrap();
        let gtt = 1.0 + 0.1 * bump(0.04 + 0.09);
        assert!((m.abs_det - gtt).abs() < 1e-14);
    }

    #[test]
    fn beta_constant_reported() {
        let model = RiemannianModel::flat_torus(&[2.0 * std::f64::consts::PI]).unwrap();
        let beta = BetaField::Cosine { mean: 1.15, amplitude: 0.65, wavenumber: 1.0, axis: 0 };
        let g = LorentzianMetric::new(StaticMetric::new(beta, model), None).unwrap();
        let grid = SpatialGrid::new(vec![8, 64], vec![0.1, 2.0 * std::f64::consts::PI / 64.0], vec![0.0, 0.0], vec![false, true]).unwrap();
        let r = validate_hypothesis(&g, &grid);
        assert!(r.passed());
        assert!(r.support_nodes.is_empty());
        assert!((r.beta_min - 0.5).abs() < 1e-12 && (r.beta_max - 1.8).abs() < 1e-12);
        assert!((r.beta_constant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_signature_listed() {
        let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[8.0]).unwrap());
        let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.0], -1.5))).unwrap();
        let grid = SpatialGrid::new(vec![9, 16], vec![0.25, 0.5], vec![-1.0, -4.0], vec![false, true]).unwrap();
        let r = validate_hypothesis(&g, &grid);
        assert!(!r.passed());
        assert!(r.violations.iter().any(|v| v.contains("x = [0.0, 0.0]")));
    }

    #[test]
    fn flat_and_beta_two_light_cones() {
        let grid = line(64, 8.0);
        let mink = LorentzianMetric::minkowski(1, 8.0).unwrap();
        assert_eq!(causal_relation(&[0.0, 0.0], &[1.0, 0.5], &mink, &grid).unwrap(), CausalRelation::Past);
        assert_eq!(causal_relation(&[1.0, 0.5], &[0.0, 0.0], &mink, &grid).unwrap(), CausalRelation::Future);
        let b2 = LorentzianMetric::new(
            StaticMetric::new(BetaField::Constant(2.0), RiemannianModel::flat_torus(&[8.0]).unwrap()),
            None,
        )
        .unwrap();
        assert_eq!(causal_relation(&[0.0, 0.0], &[0.3, 0.5], &b2, &grid).unwrap(), CausalRelation::Unrelated);
        let d = optical_distance(&b2.background, &grid, &[0.0], &[0.5]);
        assert!((d - 0.5 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn curvature_of_minkowski_vanishes() {
        let g = LorentzianMetric::minkowski(3, 6.0).unwrap();
        assert!(lorentzian_scalar_curvature(&g, &[0.0, 1.0, 2.0, 3.0]).unwrap().abs() < 1e-10);
    }
}
