//! On-diagonal Lorentzian zeta density `(□ − iε)^{−α}(x,x)` on ultrastatic
//! `ℝ × M` and its residue at `α = n/2 − 1`.
//!
//! With spatial modes the time direction integrates out:
//! `(□ − iε)^{−α}(x,x) = Σ_k ρ_k · (1/2π)∫(−τ² + λ_k − iε)^{−α} dτ`
//! `= c(α) Σ_k ρ_k (λ_k − iε)^{1/2−α}`, `c(α) = iΓ(α−½)/(2√π Γ(α))`.
//!
//! Below `Re α = n/2` the sum diverges. It is continued by fitting smoothly
//! truncated partial sums `S(Λ) = Σ ρ_k (λ_k − iε)^{1/2−α} χ(λ_k/Λ)` to
//! `ζ + Σ_j A_j Λ^{(d+1)/2−α−j}` and keeping `ζ`.

use crate::error::{invalid, Error, Result};
use crate::geometry::{analytic_spectrum, Eigenfunctions, ModelKind, SpectralData};
use crate::quad;
use crate::spacetime::{lorentzian_scalar_curvature, LorentzianMetric};
use crate::special::{gamma, gamma_real};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

type C64 = Complex64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `c(α) = iΓ(α − ½) / (2√π Γ(α))`.
pub fn tau_constant(alpha: C64) -> C64 {
    c(0.0, 1.0) * gamma(alpha - 0.5) / (gamma(alpha) * (2.0 * PI.sqrt()))
}

fn check_tau_args(eps: f64, alpha: C64) -> Result<()> {
    if !(alpha.re > 0.5) {
        return Err(Error::Domain(format!("Re α = {} must exceed 1/2", alpha.re)));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain("ε must be positive".into()));
    }
    Ok(())
}

/// `(1/2π)∫_ℝ (−τ² + λ − iε)^{−α} dτ` in closed form.
pub fn tau_integral(lambda: f64, eps: f64, alpha: C64) -> Result<C64> {
    check_tau_args(eps, alpha)?;
    Ok(tau_constant(alpha) * c(lambda, -eps).powc(c(0.5, 0.0) - alpha))
}

/// Same integral by adaptive quadrature on the real line.
pub fn tau_integral_quadrature(lambda: f64, eps: f64, alpha: C64, tol: f64) -> Result<C64> {
    check_tau_args(eps, alpha)?;
    let f = |t: f64| c(lambda - t * t, -eps).powc(-alpha);
    let a = 1.0f64.max(2.0 * lambda.max(0.0).sqrt());
    Ok(quad::integrate_line(f, a, tol)? / (2.0 * PI))
}

fn analytic_parts(sp: &SpectralData) -> Result<(&[f64], &[f64], f64)> {
    match &sp.eigenfunctions {
        Eigenfunctions::Analytic { density, complete_below, .. } => Ok((&sp.eigenvalues, density, *complete_below)),
        Eigenfunctions::Grid { .. } => Err(invalid("zeta sums need analytic spectral data")),
    }
}

/// Local Weyl density `dN/dλ / vol = λ^{d/2−1} / ((4π)^{d/2} Γ(d/2))`.
fn weyl_prefactor(d: usize) -> f64 {
    1.0 / ((4.0 * PI).powf(0.5 * d as f64) * gamma_real(0.5 * d as f64))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagonalValue {
    pub value: C64,
    /// Weyl bound on the discarded tail.
    pub tail: f64,
}

/// Truncated mode sum of the diagonal for `Re α > n/2`. The density of a
/// homogeneous space does not depend on the point, so `x` only documents
/// where the kernel is restricted.
pub fn lorentzian_power_diagonal(sp: &SpectralData, spatial_dim: usize, _x: &[f64], alpha: C64, eps: f64) -> Result<DiagonalValue> {
    let (lam, dens, top) = analytic_parts(sp)?;
    let ca = tau_constant(alpha);
    check_tau_args(eps, alpha)?;
    let mut sum = c(0.0, 0.0);
    for (l, r) in lam.iter().zip(dens) {
        if *l < top {
            sum += c(*l, -eps).powc(c(0.5, 0.0) - alpha) * *r;
        }
    }
    let value = ca * sum;
    let p = alpha.re - 0.5 * (spatial_dim as f64 + 1.0);
    let tail = if p > 0.0 { ca.norm() * weyl_prefactor(spatial_dim) * top.powf(-p) / p } else { f64::INFINITY };
    if tail > 0.1 * value.norm() {
        return Err(Error::Domain(format!("tail bound {tail:.3e} exceeds 10% of the partial sum {:.3e}", value.norm())));
    }
    Ok(DiagonalValue { value, tail })
}

/// Smooth step: 1 for `x ≤ x0`, 0 for `x ≥ 1`.
pub fn cutoff_weight(x: f64, x0: f64) -> f64 {
    let s = ((1.0 - x) / (1.0 - x0)).clamp(0.0, 1.0);
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuationParams {
    /// Plateau end of the cutoff profile.
    pub x0: f64,
    /// Ratio between the largest and smallest fitted cutoff.
    pub q: f64,
    pub n_lambda: usize,
    /// Highest subtracted power index.
    pub terms: usize,
}

impl Default for ContinuationParams {
    fn default() -> Self {
        ContinuationParams { x0: 0.0, q: 4.0, n_lambda: 20, terms: 2 }
    }
}

fn lstsq_intercept(a: DMatrix<C64>, b: DVector<C64>) -> Result<C64> {
    let norms: Vec<f64> = a.column_iter().map(|col| col.norm()).collect();
    let mut a = a;
    for (j, nrm) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nrm);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let cond = sv.max() / sv.min();
    if !(cond < 1e12) {
        return Err(Error::Solver(format!("ill-conditioned fit (condition {cond:.2e})")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::Solver(e.to_string()))?;
    Ok(x[0] / norms[0])
}

/// Continued value of `(□ − iε)^{−α}(x,x)` from partial sums below the
/// completeness bound of `sp`.
pub fn continued_diagonal(sp: &SpectralData, spatial_dim: usize, alpha: C64, eps: f64, params: &ContinuationParams) -> Result<C64> {
    let (lam, dens, top) = analytic_parts(sp)?;
    check_tau_args(eps, alpha)?;
    let lmax = lam.iter().cloned().filter(|l| *l < top).fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Err(invalid("spectrum too short for continuation"));
    }
    let base: Vec<C64> = lam
        .iter()
        .zip(dens)
        .filter(|(l, _)| **l <= lmax)
        .map(|(l, r)| c(*l, -eps).powc(c(0.5, 0.0) - alpha) * *r)
        .collect();
    let nl = params.n_lambda;
    let cuts: Vec<f64> = (0..nl).map(|i| lmax * params.q.powf(i as f64 / (nl - 1) as f64 - 1.0)).collect();
    let sums: Vec<C64> = cuts
        .iter()
        .map(|&cut| {
            base.iter().zip(lam).fold(c(0.0, 0.0), |s, (b, l)| {
                let w = cutoff_weight(l / cut, params.x0);
                if w == 0.0 { s } else { s + b * w }
            })
        })
        .collect();
    let p = c(0.5 * (spatial_dim as f64 + 1.0), 0.0) - alpha;
    let cols = params.terms + 2;
    let a = DMatrix::from_fn(nl, cols, |i, j| if j == 0 { c(1.0, 0.0) } else { c(cuts[i], 0.0).powc(p - (j - 1) as f64) });
    let zeta = lstsq_intercept(a, DVector::from_vec(sums))?;
    Ok(tau_constant(alpha) * zeta)
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaSamples {
    pub x: Vec<f64>,
    pub alphas: Vec<C64>,
    pub epsilons: Vec<f64>,
    /// `values[a][e]`.
    pub values: Vec<Vec<C64>>,
    pub cutoff: usize,
    pub pole: f64,
}

/// Samples on the circle `|α − α₀| = radius` (`M` points) for every `ε`.
pub fn zeta_samples(
    sp: &SpectralData,
    spatial_dim: usize,
    x: &[f64],
    cutoff: usize,
    epsilons: &[f64],
    radius: f64,
    points: usize,
    params: &ContinuationParams,
) -> Result<ZetaSamples> {
    let pole = 0.5 * (spatial_dim as f64 + 1.0) - 1.0;
    let alphas: Vec<C64> = (0..points)
        .map(|m| c(pole, 0.0) + C64::from_polar(radius, 2.0 * PI * (m as f64 + 0.5) / points as f64))
        .collect();
    if alphas.iter().any(|a| a.re <= 0.5) {
        return Err(Error::Domain("α circle crosses Re α = 1/2".into()));
    }
    let values = alphas
        .par_iter()
        .map(|a| epsilons.iter().map(|&e| continued_diagonal(sp, spatial_dim, *a, e, params)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ZetaSamples { x: x.to_vec(), alphas, epsilons: epsilons.to_vec(), values, cutoff, pole })
}

/// Intercept at the pole of a linear fit of `(α − α₀)ζ(α)` over the samples.
pub fn pole_fit(samples: &ZetaSamples) -> Result<Vec<C64>> {
    let m = samples.alphas.len();
    let a = DMatrix::from_fn(m, 2, |i, j| if j == 0 { c(1.0, 0.0) } else { samples.alphas[i] - samples.pole });
    (0..samples.epsilons.len())
        .map(|e| {
            let b = DVector::from_fn(m, |i, _| (samples.alphas[i] - samples.pole) * samples.values[i][e]);
            lstsq_intercept(a.clone(), b)
        })
        .collect()
}

/// Polynomial extrapolation to `ε = 0` through the last `k` points.
pub fn richardson(eps: &[f64], vals: &[C64], k: usize) -> C64 {
    let n = eps.len();
    let (e, v) = (&eps[n - k..], &vals[n - k..]);
    // Lagrange basis at 0
    (0..k)
        .map(|i| {
            let w: f64 = (0..k).filter(|&j| j != i).map(|j| e[j] / (e[j] - e[i])).product();
            v[i] * w
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatCoefficients {
    pub a: Vec<f64>,
    pub window: (f64, f64),
    pub residual: f64,
}

/// Fits `Σ ρ_k e^{−tλ_k}` to `(4πt)^{−d/2} Σ_j a_j t^j` on a geometric window
/// starting where `e^{−tλ_max} ≈ 7·10⁻¹³`.
pub fn local_heat_coefficients(sp: &SpectralData, spatial_dim: usize, _x: &[f64], terms: usize) -> Result<HeatCoefficients> {
    let (lam, dens, top) = analytic_parts(sp)?;
    let lmax = lam.iter().cloned().filter(|l| *l < top).fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Err(invalid("spectrum too short for a heat fit"));
    }
    let t0 = 28.0 / lmax;
    let t1 = 20.0 * t0;
    if t1 > 1.0 {
        return Err(Error::Solver(format!("heat window collapsed: t ∈ [{t0:.3e}, {t1:.3e}]")));
    }
    let npts = 40;
    let ts: Vec<f64> = (0..npts).map(|i| t0 * (t1 / t0).powf(i as f64 / (npts - 1) as f64)).collect();
    let d = spatial_dim as f64;
    let ys: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let h: f64 = lam.iter().zip(dens).filter(|(l, _)| **l < top).map(|(l, r)| r * (-t * l).exp()).sum();
            h * (4.0 * PI * t).powf(0.5 * d)
        })
        .collect();
    // fit in u = t / t1 for conditioning
    let a = DMatrix::from_fn(npts, terms + 1, |i, j| (ts[i] / t1).powi(j as i32));
    let b = DVector::from_vec(ys.clone());
    let svd = a.clone().svd(true, true);
    let cond = svd.singular_values.max() / svd.singular_values.min();
    if cond > 1e10 {
        return Err(Error::Solver(format!("ill-conditioned heat fit (condition {cond:.2e})")));
    }
    let coef = svd.solve(&b, 0.0).map_err(|e| Error::Solver(e.to_string()))?;
    let fitted = &a * &coef;
    let residual = (&fitted - &b).norm() / b.norm();
    let a_j = (0..=terms).map(|j| coef[j] / t1.powi(j as i32)).collect();
    Ok(HeatCoefficients { a: a_j, window: (t0, t1), residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResidueRoute {
    PoleFit,
    HeatCoefficient,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueEstimate {
    pub value: C64,
    pub route: ResidueRoute,
    pub epsilons: Vec<f64>,
    /// Residue at each `ε` (pole-fit route).
    pub per_epsilon: Vec<C64>,
    pub richardson_two: C64,
    pub richardson_three: C64,
    pub cutoffs: Vec<usize>,
    /// Extrapolated residue for each cutoff.
    pub per_cutoff: Vec<C64>,
    pub error_bar: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueComparison {
    pub pole_fit: ResidueEstimate,
    pub heat: ResidueEstimate,
    pub agree: bool,
}

/// Residue from the heat coefficients: the Mellin pole of the mode sum sits
/// at `j = 1`, giving `c(α₀)(4π)^{−d/2}(a₁ + iε a₀)/Γ(α₀ − ½)`.
pub fn heat_residue(heat: &HeatCoefficients, spatial_dim: usize, eps: f64) -> C64 {
    let a0 = (spatial_dim as f64 + 1.0) * 0.5 - 1.0;
    let pref = tau_constant(c(a0, 0.0)) * (4.0 * PI).powf(-0.5 * spatial_dim as f64) / gamma_real(a0 - 0.5);
    pref * c(heat.a[1], eps * heat.a[0])
}

/// Both routes. `samples` holds one entry per cutoff (ascending), each with
/// at least three `ε` values.
pub fn residue_estimate(samples: &[ZetaSamples], heat: &[HeatCoefficients], spatial_dim: usize) -> Result<ResidueComparison> {
    let n = spatial_dim + 1;
    if n % 2 != 0 || n < 4 {
        return Err(invalid(format!("space-time dimension {n} must be even and at least 4")));
    }
    if samples.len() < 2 || samples.iter().any(|s| s.epsilons.len() < 3) {
        return Err(invalid("need two cutoffs and at least three ε values"));
    }
    let mut per_cutoff = Vec::new();
    let mut last = None;
    for s in samples {
        let r = pole_fit(s)?;
        let two = richardson(&s.epsilons, &r, 2);
        let three = richardson(&s.epsilons, &r, 3);
        per_cutoff.push(three);
        last = Some((s.epsilons.clone(), r, two, three));
    }
    let (epsilons, per_eps, two, three) = last.unwrap();
    let spread = per_cutoff.iter().map(|v| (v - three).norm()).fold(0.0, f64::max);
    let pole_err = (two - three).norm() + spread;
    let pole = ResidueEstimate {
        value: three,
        route: ResidueRoute::PoleFit,
        epsilons: epsilons.clone(),
        per_epsilon: per_eps,
        richardson_two: two,
        richardson_three: three,
        cutoffs: samples.iter().map(|s| s.cutoff).collect(),
        per_cutoff,
        error_bar: pole_err,
    };
    let h = heat.last().ok_or_else(|| invalid("no heat coefficients"))?;
    let per_eps_h: Vec<C64> = epsilons.iter().map(|&e| heat_residue(h, spatial_dim, e)).collect();
    let hv = heat_residue(h, spatial_dim, 0.0);
    let per_cut_h: Vec<C64> = heat.iter().map(|hc| heat_residue(hc, spatial_dim, 0.0)).collect();
    let h_err = per_cut_h.iter().map(|v| (v - hv).norm()).fold(0.0, f64::max)
        + h.residual * hv.norm().max(tau_constant(c(1.0, 0.0)).norm() * (4.0 * PI).powf(-1.5) * h.a[0].abs());
    let heat_est = ResidueEstimate {
        value: hv,
        route: ResidueRoute::HeatCoefficient,
        epsilons,
        richardson_two: richardson(&pole.epsilons, &per_eps_h, 2),
        richardson_three: richardson(&pole.epsilons, &per_eps_h, 3),
        per_epsilon: per_eps_h,
        cutoffs: pole.cutoffs.clone(),
        per_cutoff: per_cut_h,
        error_bar: h_err,
    };
    // error bars are tiny when both routes are exact; allow a floor relative to the scale
    let scale = (4.0 * PI).powf(-0.5 * spatial_dim as f64) * 1e-3;
    let agree = (pole.value - heat_est.value).norm() <= 3.0 * (pole.error_bar + heat_est.error_bar) + scale;
    Ok(ResidueComparison { pole_fit: pole, heat: heat_est, agree })
}

#[derive(Debug, Clone, Serialize)]
pub struct PoleFormulaReport {
    pub point: Vec<f64>,
    pub lhs: C64,
    pub rhs: C64,
    pub scalar_curvature: f64,
    pub relative_error: Option<f64>,
    pub absolute_error: f64,
    pub residues: ResidueComparison,
    pub heat: HeatCoefficients,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoleFormulaParams {
    pub cutoffs: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub radius: f64,
    pub points: usize,
    pub heat_terms: usize,
    pub continuation: ContinuationParams,
}

impl Default for PoleFormulaParams {
    fn default() -> Self {
        PoleFormulaParams {
            cutoffs: vec![60, 80],
            epsilons: vec![0.2, 0.1, 0.05],
            radius: 0.25,
            points: 16,
            heat_terms: 4,
            continuation: ContinuationParams::default(),
        }
    }
}

/// `R_g / (i · 6 · (4π)^{n/2} Γ(n/2 − 1))`.
pub fn pole_rhs(scalar_curvature: f64, n: usize) -> C64 {
    let nn = n as f64;
    c(scalar_curvature, 0.0) / (c(0.0, 6.0) * (4.0 * PI).powf(0.5 * nn) * gamma_real(0.5 * nn - 1.0))
}

/// Both sides of the residue formula at `x` for an ultrastatic catalog metric.
pub fn check_pole_formula(g: &LorentzianMetric, x: &[f64], params: &PoleFormulaParams) -> Result<PoleFormulaReport> {
    if g.perturbation.is_some() || !g.background.beta.is_constant() || g.background.beta.eval(&[]) != 1.0 {
        return Err(Error::Unsupported("the zeta pipeline needs an unperturbed ultrastatic metric".into()));
    }
    let model = &g.background.model;
    if !matches!(model.kind, ModelKind::FlatTorus { .. } | ModelKind::RoundSphere { .. }) {
        return Err(Error::Unsupported("analytic spectra exist only for tori and spheres".into()));
    }
    let d = model.dim;
    let ctx = |e: Error, what: &str| e.context(what.to_string());
    let mut samples = Vec::new();
    let mut heats = Vec::new();
    for &cut in &params.cutoffs {
        let sp = analytic_spectrum(model, cut).map_err(|e| ctx(e, "analytic spectrum"))?;
        samples.push(
            zeta_samples(&sp, d, x, cut, &params.epsilons, params.radius, params.points, &params.continuation)
                .map_err(|e| ctx(e, "zeta samples"))?,
        );
        heats.push(local_heat_coefficients(&sp, d, x, params.heat_terms).map_err(|e| ctx(e, "heat coefficients"))?);
    }
    let residues = residue_estimate(&samples, &heats, d).map_err(|e| ctx(e, "residue estimate"))?;
    let r = lorentzian_scalar_curvature(g, x).map_err(|e| ctx(e, "scalar curvature"))?;
    let rhs = pole_rhs(r, d + 1);
    let lhs = residues.pole_fit.value;
    let absolute_error = (lhs - rhs).norm();
    Ok(PoleFormulaReport {
        point: x.to_vec(),
        lhs,
        rhs,
        scalar_curvature: r,
        relative_error: if rhs.norm() > 0.0 { Some(absolute_error / rhs.norm()) } else { None },
        absolute_error,
        residues,
        heat: heats.pop().unwrap(),
    })
}
