//! Bicharacteristics of `p(x;ξ) = g^{jk}(x) ξ_j ξ_k`, the components `Σ±`,
//! Feynman-set membership, and wave-packet measurements of resolvent output.
//!
//! Covectors are written `ξ = (τ, η)`; in a static region `Σ± = {τ = ±|η|}`
//! (with `|η|` measured by the optical metric).

use crate::curvature::{inverse_metric_gradient, MetricField};
use crate::error::{invalid, Error, Result};
use crate::grid::SpatialGrid;
use crate::resolvent::{direct_resolvent_apply, DirectResolvent, C64};
use crate::spacetime::{causal_relation, CausalRelation, LorentzianMetric};
use crate::waveop::SpacetimeGrid;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CotangentPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl CotangentPoint {
    pub fn new(x: &[f64], xi: &[f64]) -> Self {
        CotangentPoint { x: x.to_vec(), xi: xi.to_vec() }
    }

    pub fn xi_norm(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn unit(&self) -> Vec<f64> {
        let n = self.xi_norm();
        self.xi.iter().map(|v| v / n).collect()
    }
}

pub fn symbol(g: &LorentzianMetric, x: &[f64], xi: &[f64]) -> Result<f64> {
    let ginv = g.metric_at(x)?.ginv;
    let v = DVector::from_column_slice(xi);
    Ok((v.transpose() * ginv * &v)[(0, 0)])
}

/// Metric wrapper with its own difference step.
struct Stepped<'a>(&'a LorentzianMetric, f64);

impl MetricField for Stepped<'_> {
    fn dim(&self) -> usize {
        self.0.n
    }
    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.0.components(x)
    }
    fn fd_step(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Flow-parameter length; negative integrates backwards.
    pub horizon: f64,
    /// Local error tolerance (mixed absolute/relative).
    pub tol: f64,
    pub max_step: f64,
    /// Allowed `(lo, hi)` per axis; `None` entries are unbounded.
    pub domain: Vec<Option<(f64, f64)>>,
    /// Difference step for metric derivatives (defaults to a tenth of the
    /// curvature step; coarser steps show up directly as drift of `p`).
    pub fd_step: Option<f64>,
}

impl FlowOptions {
    pub fn new(horizon: f64) -> Self {
        FlowOptions { horizon, tol: 1e-10, max_step: 0.05, domain: Vec::new(), fd_step: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bicharacteristic {
    /// Flow parameter at each sample.
    pub s: Vec<f64>,
    pub samples: Vec<CotangentPoint>,
    pub p_values: Vec<f64>,
    /// `+1` forwards, `−1` backwards in `s`.
    pub direction: f64,
    /// Set when the curve left the domain before the horizon.
    pub truncated: bool,
}

impl Bicharacteristic {
    pub fn last(&self) -> &CotangentPoint {
        self.samples.last().unwrap()
    }

    pub fn max_p_drift(&self) -> f64 {
        let p0 = self.p_values[0];
        self.p_values.iter().map(|p| (p - p0).abs()).fold(0.0, f64::max)
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn hamilton_rhs(m: &Stepped, y: &[f64]) -> Vec<f64> {
    let n = m.0.n;
    let (x, xi) = y.split_at(n);
    let (ginv, grad) = inverse_metric_gradient(m, x);
    let v = DVector::from_column_slice(xi);
    let dx = &ginv * &v * 2.0;
    let mut out = dx.as_slice().to_vec();
    for g in &grad {
        out.push(-(v.transpose() * g * &v)[(0, 0)]);
    }
    out
}

fn axpy(y: &[f64], h: f64, ks: &[Vec<f64>], coef: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in ks.iter().zip(coef) {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// Dormand–Prince 5(4) integration of `ẋ = ∂_ξ p`, `ξ̇ = −∂_x p`.
pub fn hamilton_flow(g: &LorentzianMetric, start: &CotangentPoint, opts: &FlowOptions) -> Result<Bicharacteristic> {
    let n = g.n;
    if start.x.len() != n || start.xi.len() != n {
        return Err(invalid("cotangent point has the wrong dimension"));
    }
    let xin = start.xi_norm();
    if xin == 0.0 {
        return Err(invalid("zero covector"));
    }
    let p0 = symbol(g, &start.x, &start.xi)?;
    if p0.abs() > opts.tol.max(1e-9) * xin * xin {
        return Err(invalid(format!("start point is not characteristic: p = {p0:.3e}")));
    }
    let m = Stepped(g, opts.fd_step.unwrap_or_else(|| 0.1 * g.fd_step()));
    let dir = if opts.horizon < 0.0 { -1.0 } else { 1.0 };
    let total = opts.horizon.abs();
    let outside = |x: &[f64]| {
        opts.domain.iter().zip(x).any(|(d, v)| d.is_some_and(|(lo, hi)| *v < lo || *v > hi))
    };
    let mut y: Vec<f64> = start.x.iter().chain(&start.xi).cloned().collect();
    let mut s = 0.0;
    let mut h = opts.max_step.min(total).max(1e-12);
    let mut k1: Vec<f64> = hamilton_rhs(&m, &y).iter().map(|v| v * dir).collect();
    let mut out = Bicharacteristic { s: vec![0.0], samples: vec![start.clone()], p_values: vec![p0], direction: dir, truncated: false };
    while total - s > 1e-13 * total.max(1.0) {
        h = h.min(total - s).min(opts.max_step);
        if h < 1e-14 * total.max(1.0) {
            return Err(Error::Solver(format!("step-size collapse at s = {s:.6}")));
        }
        let mut ks = vec![k1.clone()];
        for (i, row) in A.iter().enumerate() {
            let yi = axpy(&y, h, &ks, &row[..=i]);
            ks.push(hamilton_rhs(&m, &yi).iter().map(|v| v * dir).collect());
        }
        let ynew = axpy(&y, h, &ks[..6], &A[5]);
        let err = (0..2 * n)
            .map(|i| {
                let e: f64 = (0..7).map(|j| E[j] * ks[j][i]).sum::<f64>() * h;
                e.abs() / (opts.tol * (1.0 + y[i].abs().max(ynew[i].abs())))
            })
            .fold(0.0, f64::max);
        if err <= 1.0 {
            s += h;
            y = ynew;
            k1 = ks.pop().unwrap();
            let pt = CotangentPoint::new(&y[..n], &y[n..]);
            if pt.xi_norm() == 0.0 {
                return Err(Error::Solver("covector vanished along the flow".into()));
            }
            out.p_values.push(symbol(g, &pt.x, &pt.xi)?);
            out.s.push(s * dir);
            let exit = outside(&pt.x);
            out.samples.push(pt);
            if exit {
                out.truncated = true;
                break;
            }
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(out)
}

/// Completes a spatial covector `η` to a characteristic `ξ = (τ, η)` on the
/// requested component (`sign = ±1` picks the root with `sign · g^{tk}ξ_k > 0`).
pub fn null_covector(g: &LorentzianMetric, x: &[f64], eta: &[f64], sign: f64) -> Result<Vec<f64>> {
    let ginv = g.metric_at(x)?.ginv;
    let n = g.n;
    let a = ginv[(0, 0)];
    let b: f64 = (1..n).map(|k| ginv[(0, k)] * eta[k - 1]).sum();
    let c: f64 = (1..n).flat_map(|j| (1..n).map(move |k| (j, k))).map(|(j, k)| ginv[(j, k)] * eta[j - 1] * eta[k - 1]).sum();
    let disc = (b * b - a * c).max(0.0).sqrt();
    // roots τ = (−b ± disc)/a; g^{tk}ξ_k = aτ + b = ±disc
    let tau = (-b + sign.signum() * disc) / a;
    let mut xi = vec![tau];
    xi.extend_from_slice(eta);
    Ok(xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    SigmaPlus,
    SigmaMinus,
    Elliptic,
}

impl Component {
    pub fn sign(self) -> f64 {
        match self {
            Component::SigmaPlus => 1.0,
            Component::SigmaMinus => -1.0,
            Component::Elliptic => 0.0,
        }
    }
}

fn static_component(xi: &[f64]) -> Component {
    if xi[0] > 0.0 {
        Component::SigmaPlus
    } else {
        Component::SigmaMinus
    }
}

/// Classifies `(x;ξ)`. Inside the perturbation the point is flowed out both
/// ways and the sign of `τ` is read in the static region; the two readings
/// must agree.
pub fn classify_component(g: &LorentzianMetric, point: &CotangentPoint, null_tol: f64, horizon: f64) -> Result<Component> {
    let xn = point.xi_norm();
    let p = symbol(g, &point.x, &point.xi)?;
    if p.abs() > null_tol * xn * xn {
        return Ok(Component::Elliptic);
    }
    if !g.is_perturbed_at(&point.x) {
        return Ok(static_component(&point.xi));
    }
    let mut found = Vec::new();
    for sgn in [1.0, -1.0] {
        let mut opts = FlowOptions::new(sgn * horizon);
        opts.tol = 1e-9;
        let curve = hamilton_flow(g, point, &opts)?;
        if let Some(pt) = curve.samples.iter().find(|q| !g.is_perturbed_at(&q.x) && !near_support(g, &q.x)) {
            found.push(static_component(&pt.xi));
        }
    }
    match found.as_slice() {
        [] => Err(Error::Solver("flow did not leave the perturbation within the horizon (possible trapping)".into())),
        [c] => Ok(*c),
        [a, b] if a == b => Ok(*a),
        _ => Err(Error::Solver("inconsistent Σ± readings on the two ends of the bicharacteristic".into())),
    }
}

fn near_support(g: &LorentzianMetric, x: &[f64]) -> bool {
    g.perturbation.as_ref().is_some_and(|p| {
        let r2: f64 = x.iter().zip(&p.center).zip(&p.half_widths).map(|((x, c), w)| ((x - c) / w).powi(2)).sum();
        r2 < 1.0
    })
}

#[derive(Debug, Clone)]
pub struct FeynmanQuery {
    pub first: CotangentPoint,
    pub second: CotangentPoint,
    /// In `(0, π/8]`.
    pub tolerance_angle: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeynmanVerdict {
    pub contains: bool,
    pub reason: String,
    pub witness: Option<Bicharacteristic>,
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
    d.clamp(-1.0, 1.0).acos()
}

fn position_gap(grid: &SpatialGrid, a: &[f64], b: &[f64]) -> f64 {
    let mut s = (a[0] - b[0]).powi(2);
    for k in 0..grid.dim() {
        let mut d = a[k + 1] - b[k + 1];
        if grid.periodic[k] {
            let l = grid.extent(k);
            d -= l * (d / l).round();
        }
        s += d * d;
    }
    s.sqrt()
}

/// Membership of `((x₁;ξ₁),(x₂;ξ₂))` in the Feynman set: the diagonal, or the
/// same bicharacteristic within `Σ^s` with `x₁ ∈ J₋(x₂)` on `Σ⁺` and
/// `x₁ ∈ J₊(x₂)` on `Σ⁻`.
pub fn feynman_contains(query: &FeynmanQuery, g: &LorentzianMetric, grid: &SpatialGrid) -> Result<FeynmanVerdict> {
    let (p1, p2) = (&query.first, &query.second);
    if !(query.tolerance_angle > 0.0 && query.tolerance_angle <= std::f64::consts::PI / 8.0) {
        return Err(invalid("tolerance angle must lie in (0, π/8]"));
    }
    if p1.xi_norm() == 0.0 || p2.xi_norm() == 0.0 {
        return Err(invalid("zero covector"));
    }
    let cell = grid.spacing.iter().cloned().fold(0.0, f64::max);
    if position_gap(grid, &p1.x, &p2.x) <= cell && angle(&p1.xi, &p2.xi) <= query.tolerance_angle {
        return Ok(FeynmanVerdict { contains: true, reason: "diagonal".into(), witness: None });
    }
    let c1 = classify_component(g, p1, 1e-8, query.horizon)?;
    let c2 = classify_component(g, p2, 1e-8, query.horizon)?;
    if c1 == Component::Elliptic || c2 == Component::Elliptic {
        return Ok(FeynmanVerdict { contains: false, reason: "elliptic covector".into(), witness: None });
    }
    if c1 != c2 {
        return Ok(FeynmanVerdict { contains: false, reason: "different components of Σ".into(), witness: None });
    }
    let start = CotangentPoint::new(&p2.x, &p2.unit());
    let speed = {
        let ginv = g.metric_at(&start.x)?.ginv;
        (ginv * DVector::from_column_slice(&start.xi) * 2.0).norm()
    };
    let mut matched = None;
    for sgn in [1.0, -1.0] {
        let mut opts = FlowOptions::new(sgn * query.horizon);
        opts.tol = 1e-9;
        opts.max_step = 0.25 * cell / speed;
        let curve = hamilton_flow(g, &start, &opts)?;
        let hit = curve.samples.iter().position(|q| {
            position_gap(grid, &q.x, &p1.x) <= cell && angle(&q.xi, &p1.xi) <= query.tolerance_angle
        });
        if hit.is_some() {
            matched = Some(curve);
            break;
        }
    }
    let Some(curve) = matched else {
        return Ok(FeynmanVerdict { contains: false, reason: "not on a common bicharacteristic".into(), witness: None });
    };
    let rel = causal_relation(&p1.x, &p2.x, g, grid)?;
    let ok = match (c1, rel) {
        (_, CausalRelation::Coincident) => true,
        (Component::SigmaPlus, CausalRelation::Past) => true,
        (Component::SigmaMinus, CausalRelation::Future) => true,
        _ => false,
    };
    Ok(FeynmanVerdict {
        contains: ok,
        reason: if ok { format!("{c1:?} with {rel:?}") } else { format!("orientation violated: {c1:?} with {rel:?}") },
        witness: Some(curve),
    })
}

/// Gaussian packet `exp(−|x−x₀|²/2σ²) e^{iκ ξ̂·(x−x₀)}` with peak value 1.
#[derive(Debug, Clone, Serialize)]
pub struct WavePacket {
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
    pub sigma: f64,
    pub kappa: f64,
}

/// Radius beyond which `|ψ|²` carries less than `1e−12` of the mass.
const MASS_RADIUS: f64 = 5.3;

impl WavePacket {
    pub fn new(center: &[f64], direction: &[f64], sigma: f64, kappa: f64) -> Result<Self> {
        if !(sigma > 0.0 && kappa > 0.0) {
            return Err(invalid("packet scale and frequency must be positive"));
        }
        if kappa * sigma < 4.0 - 1e-12 {
            return Err(invalid(format!("κσ = {} below 4: packet does not resolve its oscillation", kappa * sigma)));
        }
        let nrm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(invalid("zero packet direction"));
        }
        Ok(WavePacket { center: center.to_vec(), direction: direction.iter().map(|v| v / nrm).collect(), sigma, kappa })
    }

    /// Fixed-aspect packet with `σ = aspect / κ`.
    pub fn with_aspect(center: &[f64], direction: &[f64], kappa: f64, aspect: f64) -> Result<Self> {
        Self::new(center, direction, aspect / kappa, kappa)
    }

    pub fn check(&self, grid: &SpacetimeGrid) -> Result<()> {
        let g = &grid.grid;
        let cell = g.spacing.iter().cloned().fold(0.0, f64::max);
        if self.sigma < 2.0 * cell {
            return Err(invalid(format!("packet width {} below two grid cells", self.sigma)));
        }
        let r = MASS_RADIUS * self.sigma;
        for a in 0..g.dim() {
            let lo = g.origin[a];
            let hi = lo + (g.nodes[a] - 1) as f64 * g.spacing[a];
            let ok = if g.periodic[a] { 2.0 * r < g.extent(a) } else { self.center[a] - r >= lo && self.center[a] + r <= hi };
            if !ok {
                return Err(Error::Domain(format!("packet too close to the domain edge along axis {a}")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &SpacetimeGrid) -> Result<Vec<C64>> {
        self.check(grid)?;
        let g = &grid.grid;
        let d = g.dim();
        Ok((0..g.len())
            .into_par_iter()
            .map(|i| {
                let x = g.coords(i);
                let mut r2 = 0.0;
                let mut ph = 0.0;
                for a in 0..d {
                    let mut dx = x[a] - self.center[a];
                    if g.periodic[a] {
                        let l = g.extent(a);
                        dx -= l * (dx / l).round();
                    }
                    r2 += dx * dx;
                    ph += self.direction[a] * dx;
                }
                let amp = (-r2 / (2.0 * self.sigma * self.sigma)).exp();
                if amp < 1e-300 { C64::new(0.0, 0.0) } else { C64::from_polar(amp, self.kappa * ph) }
            })
            .collect())
    }
}

/// `|⟨u, ψ⟩_w|`.
pub fn packet_energy(u: &[C64], weight: &[f64], grid: &SpacetimeGrid, packet: &WavePacket) -> Result<f64> {
    let psi = packet.sample(grid)?;
    Ok(u.iter().zip(&psi).zip(weight).fold(C64::new(0.0, 0.0), |s, ((a, b), w)| s + a * b.conj() * *w).norm())
}

/// Least-squares slope of `log E` against `log κ`.
pub fn decay_exponent(kappas: &[f64], energies: &[f64]) -> f64 {
    let n = kappas.len() as f64;
    let xs: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = energies.iter().map(|e| e.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergySweep {
    pub kappas: Vec<f64>,
    pub energies: Vec<f64>,
    pub exponent: f64,
}

/// Packet energies of a fixed `u` over fixed-aspect scales.
pub fn microlocal_energy(
    u: &[C64],
    weight: &[f64],
    grid: &SpacetimeGrid,
    center: &[f64],
    direction: &[f64],
    kappas: &[f64],
    aspect: f64,
) -> Result<EnergySweep> {
    if kappas.len() < 2 {
        return Err(invalid("at least two scales are needed for a decay exponent"));
    }
    let energies = kappas
        .iter()
        .map(|&k| packet_energy(u, weight, grid, &WavePacket::with_aspect(center, direction, k, aspect)?))
        .collect::<Result<Vec<_>>>()?;
    let exponent = decay_exponent(kappas, &energies);
    Ok(EnergySweep { kappas: kappas.to_vec(), energies, exponent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProbeKind {
    /// Flowed from the source into the Feynman-allowed direction.
    Allowed,
    /// Flowed the matched amount the other way.
    Forbidden,
    /// Off-diagonal non-characteristic covector.
    Elliptic,
    /// At the source, same covector.
    Diagonal,
    Custom,
}

#[derive(Debug, Clone, Serialize)]
pub struct Probe {
    pub label: String,
    pub kind: ProbeKind,
    pub point: CotangentPoint,
}

#[derive(Debug, Clone)]
pub struct WavefrontSetup {
    pub metric: LorentzianMetric,
    pub grid: SpacetimeGrid,
    pub z: C64,
    /// Source point with a unit covector.
    pub source: CotangentPoint,
    /// Time separation between source and the allowed/forbidden probes. Kept
    /// short enough that the forbidden energy stays above rounding level at
    /// every scale.
    pub separation: f64,
    pub elliptic_offset: f64,
    pub kappas: Vec<f64>,
    /// `κσ` of every packet.
    pub aspect: f64,
    pub tolerance_angle: f64,
}

impl WavefrontSetup {
    /// 512² window (`Δt = Δy = 1/32`, `t, y ∈ [−8, 8)`), a `g_tt` bump on the
    /// allowed ray, source `((0,0); (1,1)/√2)` on `Σ⁺`, `z = i`.
    pub fn standard() -> Result<Self> {
        Self::sized(512, 16.0)
    }

    pub fn sized(nodes: usize, length: f64) -> Result<Self> {
        let spatial = SpatialGrid::periodic_box(&[nodes], &[length], &[-0.5 * length])?;
        let grid = SpacetimeGrid::line(nodes, length / nodes as f64, -0.5 * length, &spatial)?;
        let bg = crate::spacetime::StaticMetric::ultrastatic(crate::geometry::RiemannianModel::flat_torus(&[length])?);
        let bumped = crate::spacetime::Perturbation::tt_bump(&[-0.5, 0.6], &[0.35, 0.35], 0.5);
        let metric = LorentzianMetric::new(bg, Some(bumped))?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ok(WavefrontSetup {
            metric,
            grid,
            z: C64::new(0.0, 1.0),
            source: CotangentPoint::new(&[0.0, 0.0], &[r, r]),
            separation: 1.0,
            elliptic_offset: 0.75,
            kappas: vec![8.0, 16.0, 32.0],
            aspect: 6.0,
            tolerance_angle: std::f64::consts::PI / 16.0,
        })
    }

    /// Allowed, forbidden, elliptic and diagonal probes for the source.
    pub fn standard_probes(&self) -> Result<(Vec<Probe>, Bicharacteristic, Bicharacteristic)> {
        let g = &self.metric;
        let src = CotangentPoint::new(&self.source.x, &self.source.unit());
        let comp = classify_component(g, &src, 1e-8, 20.0)?;
        let ginv = g.metric_at(&src.x)?.ginv;
        let tdot: f64 = 2.0 * (0..g.n).map(|k| ginv[(0, k)] * src.xi[k]).sum::<f64>();
        let s = self.separation / tdot.abs();
        // Σ⁺ pairs with the causal past, Σ⁻ with the future
        let back_sign = if comp == Component::SigmaMinus { -1.0 } else { 1.0 };
        let allowed_dir = -back_sign * tdot.signum();
        let flow = |sgn: f64| -> Result<Bicharacteristic> {
            let mut o = FlowOptions::new(sgn * s);
            o.max_step = 0.01;
            hamilton_flow(g, &src, &o)
        };
        let allowed = flow(allowed_dir)?;
        let forbidden = flow(-allowed_dir)?;
        let unit = |p: &CotangentPoint| CotangentPoint::new(&p.x, &p.unit());
        let mut ell_x = src.x.clone();
        ell_x[1] += self.elliptic_offset;
        let mut ell_xi = vec![0.0; g.n];
        ell_xi[1] = 1.0;
        let probes = vec![
            Probe { label: "allowed".into(), kind: ProbeKind::Allowed, point: unit(allowed.last()) },
            Probe { label: "forbidden".into(), kind: ProbeKind::Forbidden, point: unit(forbidden.last()) },
            Probe { label: "elliptic".into(), kind: ProbeKind::Elliptic, point: CotangentPoint::new(&ell_x, &ell_xi) },
            Probe { label: "diagonal".into(), kind: ProbeKind::Diagonal, point: src.clone() },
        ];
        Ok((probes, allowed, forbidden))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRecord {
    pub probe: Probe,
    pub in_lambda: bool,
    pub reason: String,
    pub energies: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WavefrontReport {
    pub kappas: Vec<f64>,
    pub probes: Vec<ProbeRecord>,
    /// `E_allowed / E_forbidden` per scale.
    pub contrast: Vec<f64>,
    pub contrast_monotone: bool,
    pub elliptic_exponent: Option<f64>,
    pub source_residuals: Vec<f64>,
    pub rays: Vec<Bicharacteristic>,
}

/// One direct solve per scale with the source packet; every probe is scored
/// by its packet energy and labelled by `feynman_contains`.
pub fn wavefront_experiment(setup: &WavefrontSetup, probes: &[Probe], rays: Vec<Bicharacteristic>) -> Result<WavefrontReport> {
    if setup.metric.n != 2 {
        return Err(Error::Unsupported("wavefront experiments need 1+1 dimensions".into()));
    }
    let solver = DirectResolvent::new(&setup.metric, &setup.grid, setup.z)?;
    let weight = solver.p.weight.clone();
    let mut energies = vec![Vec::new(); probes.len()];
    let mut source_residuals = Vec::new();
    for &k in &setup.kappas {
        let src = WavePacket::with_aspect(&setup.source.x, &setup.source.xi, k, setup.aspect)?;
        let f = src.sample(&setup.grid)?;
        let u = direct_resolvent_apply(&solver, &f)?;
        source_residuals.push(solver.residual(&u, &f));
        for (i, pr) in probes.iter().enumerate() {
            let pk = WavePacket::with_aspect(&pr.point.x, &pr.point.xi, k, setup.aspect)?;
            energies[i].push(packet_energy(&u, &weight, &setup.grid, &pk)?);
        }
        log::info!("wavefront: κ = {k} solved");
    }
    let mut records = Vec::new();
    for (pr, e) in probes.iter().zip(energies) {
        let verdict = feynman_contains(
            &FeynmanQuery {
                first: pr.point.clone(),
                second: setup.source.clone(),
                tolerance_angle: setup.tolerance_angle,
                horizon: 4.0 * setup.separation,
            },
            &setup.metric,
            &setup.grid.spatial,
        )?;
        records.push(ProbeRecord {
            probe: pr.clone(),
            in_lambda: verdict.contains,
            reason: verdict.reason,
            exponent: decay_exponent(&setup.kappas, &e),
            energies: e,
        });
    }
    let find = |k: ProbeKind| records.iter().find(|r| r.probe.kind == k);
    let contrast = match (find(ProbeKind::Allowed), find(ProbeKind::Forbidden)) {
        (Some(a), Some(f)) => a.energies.iter().zip(&f.energies).map(|(x, y)| x / y.max(1e-300)).collect(),
        _ => Vec::new(),
    };
    let contrast_monotone = contrast.windows(2).all(|w| w[1] >= w[0]);
    Ok(WavefrontReport {
        kappas: setup.kappas.clone(),
        elliptic_exponent: find(ProbeKind::Elliptic).map(|r| r.exponent),
        probes: records,
        contrast,
        contrast_monotone,
        source_residuals,
        rays,
    })
}
