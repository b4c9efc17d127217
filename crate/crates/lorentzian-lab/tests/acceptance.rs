//! Acceptance suite: one PASS/FAIL line per criterion, tolerances and
//! runtime budgets as specified. Run with `cargo test --test acceptance`.

use lorentzian_lab::geometry::{analytic_spectrum, assemble_laplace_beltrami, spectrum, RiemannianModel};
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::linalg::CMat;
use lorentzian_lab::microlocal::{hamilton_flow, null_covector, wavefront_experiment, CotangentPoint, FlowOptions, WavefrontSetup};
use lorentzian_lab::resolvent::{
    accretive_sqrt, direct_resolvent_apply, outgoing_residual, static_resolvent_apply, weighted_norm, Background, DirectResolvent, Side,
    StaticSpatialOperator, TimeKernel,
};
use lorentzian_lab::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::{perturbed_pair, symmetry_residual, SpacetimeGrid};
use lorentzian_lab::zeta::{check_pole_formula, local_heat_coefficients, PoleFormulaParams};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn rel(w: &[f64], a: &[C], b: &[C]) -> f64 {
    let d: Vec<C> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    weighted_norm(w, &d) / weighted_norm(w, b)
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn sphere(r: f64) -> Res<LorentzianMetric> {
    Ok(LorentzianMetric::new(StaticMetric::ultrastatic(RiemannianModel::round_sphere(3, r)?), None)?)
}

const X: [f64; 4] = [0.0, 0.3, 0.1, -0.2];

fn params() -> PoleFormulaParams {
    PoleFormulaParams { cutoffs: vec![60, 80], epsilons: vec![0.2, 0.1, 0.05], ..Default::default() }
}

/// `i / (16π² r²)`: `R_g = −6/r²` on `ℝ × S³_r` in the sign convention used here.
fn sphere_rhs(r: f64) -> C {
    C::new(0.0, 1.0 / (16.0 * PI * PI * r * r))
}

fn residue_formula() -> Res<Outcome> {
    let p = params();
    let s = check_pole_formula(&sphere(1.0)?, &X, &p)?;
    let oracle = sphere_rhs(1.0);
    let err = (s.lhs - oracle).norm() / oracle.norm();
    let rhs_dev = (s.rhs - oracle).norm() / oracle.norm();
    let torus = LorentzianMetric::new(StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[2.0 * PI; 3])?), None)?;
    let t = check_pole_formula(&torus, &X, &p)?;
    let control = t.lhs.norm() / s.lhs.norm();
    Ok(outcome(
        err <= 0.05 && rhs_dev <= 1e-6 && control <= 1e-3,
        format!("|LHS−RHS|/|RHS| = {err:.2e} (≤ 5e-2), curvature-routine RHS vs closed form {rhs_dev:.1e}, torus |LHS|/|S³ LHS| = {control:.2e} (≤ 1e-3)"),
    ))
}

fn radius_scaling() -> Res<Outcome> {
    let p = params();
    let a = check_pole_formula(&sphere(1.0)?, &X, &p)?;
    let b = check_pole_formula(&sphere(2.0)?, &X, &p)?;
    let ratio = (b.lhs / a.lhs).re;
    let dev = (ratio - 0.25).abs() / 0.25;
    Ok(outcome(dev <= 0.05, format!("ratio {ratio:.6} vs 0.25, deviation {dev:.2e} (≤ 5e-2)")))
}

fn route_equivalence() -> Res<Outcome> {
    let sg = SpatialGrid::periodic_box(&[128], &[2.0 * PI], &[-PI])?;
    let st = SpacetimeGrid::periodic(256, 16.0, &sg)?;
    let model = RiemannianModel::flat_torus(&[2.0 * PI])?;
    let z = C::new(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let profile: Vec<C> = (0..128).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let f: Vec<C> = (0..st.len()).map(|i| profile[i % 128] * (-4.0 * st.time(i / 128).powi(2)).exp()).collect();
    let sp = spectrum(&assemble_laplace_beltrami(&model, &sg)?, 128)?;
    let us = static_resolvent_apply(&sp, z, &f, &st, TimeKernel::Discrete)?;
    let g0 = LorentzianMetric::new(StaticMetric::ultrastatic(model), None)?;
    let d = DirectResolvent::new(&g0, &st, z)?;
    let ud = direct_resolvent_apply(&d, &f)?;
    let diff = rel(&d.p.weight, &us, &ud);
    Ok(outcome(diff <= 1e-8, format!("‖u_spectral − u_direct‖_w/‖u_direct‖_w = {diff:.2e} (≤ 1e-8)")))
}

fn bumped_1p1(beta: f64) -> Res<LorentzianMetric> {
    let bg = StaticMetric::new(BetaField::Constant(beta), RiemannianModel::flat_torus(&[8.0])?);
    Ok(LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.5], 0.3)))?)
}

fn selfadjointness() -> Res<Outcome> {
    let sg = SpatialGrid::periodic_box(&[64], &[8.0], &[-4.0])?;
    let st = SpacetimeGrid::periodic(128, 16.0, &sg)?;
    let g = bumped_1p1(1.0)?;
    let (p, _) = perturbed_pair(&g, &st)?;
    let sym = symmetry_residual(&p.matrix, &p.weight, 20, 17);
    let zs = [C::new(0.0, 0.5), C::new(0.0, 1.0), C::new(1.0, 1.0)];
    let solvers = zs.iter().map(|&z| DirectResolvent::new(&g, &st, z)).collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for (z, d) in zs.iter().zip(&solvers) {
        for _ in 0..100 {
            let f = random_field(st.len(), &mut rng);
            let u = direct_resolvent_apply(d, &f)?;
            worst = worst.max(z.im * weighted_norm(&p.weight, &u) / weighted_norm(&p.weight, &f));
        }
    }
    let mut ident = 0.0f64;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        for _ in 0..5 {
            let f = random_field(st.len(), &mut rng);
            let a = solvers[i].solve_unchecked(&f)?;
            let b = solvers[j].solve_unchecked(&f)?;
            let ab = solvers[i].solve_unchecked(&b)?;
            let lhs: Vec<C> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let rhs: Vec<C> = ab.iter().map(|v| v * (zs[i] - zs[j])).collect();
            ident = ident.max(rel(&p.weight, &lhs, &rhs));
        }
    }
    Ok(outcome(
        worst <= 1.0 + 1e-6 && sym <= 1e-12 && ident <= 1e-8,
        format!("max Im z‖R f‖/‖f‖ = {worst:.6} (≤ 1+1e-6), symmetry {sym:.2e} (≤ 1e-12), resolvent identity {ident:.2e} (≤ 1e-8)"),
    ))
}

fn outgoing() -> Res<Outcome> {
    let sg = SpatialGrid::periodic_box(&[64], &[8.0], &[-4.0])?;
    let st = SpacetimeGrid::line(256, 0.0625, -8.0, &sg)?;
    let f: Vec<C> = (0..st.len())
        .map(|i| {
            let (s, y) = (st.time(i / 64) / 0.5, sg.coords(i % 64)[0]);
            let b = if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
            C::new(b * (0.4 + y.cos() + 0.3 * (3.0 * y).sin()), 0.2 * b)
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [1.0, 2.0] {
        let g = bumped_1p1(beta)?;
        let t_pert = g.perturbation.as_ref().unwrap().support_time_bound();
        let d = DirectResolvent::new(&g, &st, C::new(0.0, 1.0))?;
        let u = direct_resolvent_apply(&d, &f)?;
        let Background::Modal(modal) = &d.background else { return Err("line window without modal background".into()) };
        let plus = outgoing_residual(&u, modal, 1.0)?;
        let minus = outgoing_residual(&u, modal, -1.0)?;
        let t_out = t_pert.max(0.5) + 2.0 * st.dt();
        let right = plus.max_beyond(t_out, Side::Future).max(minus.max_beyond(t_out, Side::Past));
        let wrong = minus.min_beyond(t_out, Side::Future).min(plus.min_beyond(t_out, Side::Past));
        ok &= right <= 1e-6 && wrong >= 0.1;
        parts.push(format!("β={beta}: matched {right:.1e}, wrong sign ≥ {wrong:.2}"));
    }
    Ok(outcome(ok, format!("{} (≤ 1e-6 / O(1) ≥ 0.1)", parts.join("; "))))
}

fn accretivity() -> Res<Outcome> {
    let z = C::new(0.0, 1.0);
    let c_const = 0.5;
    let grid = SpatialGrid::periodic_box(&[256], &[2.0 * PI], &[0.0])?;
    let beta = BetaField::Cosine { mean: 1.15, amplitude: 0.64, wavenumber: 1.0, axis: 0 };
    let op = StaticSpatialOperator::new(&StaticMetric::new(beta, RiemannianModel::flat_torus(&[2.0 * PI])?), &grid)?;
    assert!(op.beta.iter().all(|b| c_const < *b && *b < 1.0 / c_const));
    let l = op.l_of_z(z);
    let root = accretive_sqrt(&l, z, 50, 29)?;
    let stated = 0.5 / c_const * z.im;
    // independent: quadratic form on fresh vectors, and the exact minimum of
    // Re⟨u, Lu⟩/‖u‖² from the Hermitian part (= Im z · min β)
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = l.nrows();
    let mut margin = f64::INFINITY;
    for _ in 0..50 {
        let u = CMat::from_fn(n, 1, |_, _| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        margin = margin.min((u.adjoint() * &l * &u)[(0, 0)].re / u.norm_squared());
    }
    let herm = (&l + l.adjoint()).map(|v| v.re * 0.5);
    let exact_min = herm.symmetric_eigenvalues().min();
    // β = 1: A(z) against Φ diag(√(λ_k − z)) Φᵀ
    let small = SpatialGrid::periodic_box(&[32], &[2.0 * PI], &[0.0])?;
    let flat = RiemannianModel::flat_torus(&[2.0 * PI])?;
    let op1 = StaticSpatialOperator::new(&StaticMetric::ultrastatic(flat.clone()), &small)?;
    let r1 = accretive_sqrt(&op1.l_of_z(z), z, 10, 1)?;
    let sp = spectrum(&assemble_laplace_beltrami(&flat, &small)?, 32)?;
    let (v, w) = (sp.vectors().unwrap(), sp.weight().unwrap());
    let mut want = CMat::zeros(32, 32);
    for (k, lam) in sp.eigenvalues.iter().enumerate() {
        let s = (C::new(*lam, 0.0) - z).sqrt();
        for i in 0..32 {
            for j in 0..32 {
                want[(i, j)] += s * v[k][i] * w[i].sqrt() * v[k][j] * w[j].sqrt();
            }
        }
    }
    let red = (&r1.a - &want).norm() / want.norm();
    Ok(outcome(
        margin >= stated && root.margin >= stated && root.square_defect <= 1e-10 && red <= 1e-10 && exact_min >= c_const * z.im,
        format!(
            "random-vector margin {margin:.4} (≥ ½C⁻¹Im z = {stated}), exact min {exact_min:.4} (≥ C Im z = {}), ‖A²−e^(−iπ/2)L‖/‖L‖ = {:.1e}, β=1 reduction {red:.1e}",
            c_const * z.im,
            root.square_defect
        ),
    ))
}

/// Fixed-step RK4 on Hamilton's equations with centered metric derivatives.
fn rk4_reference(g: &LorentzianMetric, start: &CotangentPoint, horizon: f64, steps: usize) -> Vec<f64> {
    let n = g.n;
    let ginv = |x: &[f64]| g.metric_at(x).unwrap().ginv;
    let rhs = |y: &[f64]| -> Vec<f64> {
        let (x, xi) = (&y[..n], &y[n..]);
        let gi = ginv(x);
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            out[j] = 2.0 * (0..n).map(|k| gi[(j, k)] * xi[k]).sum::<f64>();
        }
        let h = 1e-5;
        for a in 0..n {
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[a] += h;
            xm[a] -= h;
            let d = (ginv(&xp) - ginv(&xm)) / (2.0 * h);
            out[n + a] = -(0..n).flat_map(|k| (0..n).map(move |l| (k, l))).map(|(k, l)| d[(k, l)] * xi[k] * xi[l]).sum::<f64>();
        }
        out
    };
    let mut y: Vec<f64> = start.x.iter().chain(&start.xi).cloned().collect();
    let h = horizon / steps as f64;
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = rhs(&y);
        let k2 = rhs(&add(&y, &k1, h / 2.0));
        let k3 = rhs(&add(&y, &k2, h / 2.0));
        let k4 = rhs(&add(&y, &k3, h));
        for i in 0..2 * n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

fn bicharacteristics() -> Res<Outcome> {
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[40.0, 40.0])?);
    let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0; 3], &[1.0; 3], 0.6)))?;
    let x = [-3.0, 2.7, 1.4];
    let start = CotangentPoint::new(&x, &null_covector(&g, &x, &[0.8, 0.6], 1.0)?);
    let fwd = hamilton_flow(&g, &start, &FlowOptions::new(10.0))?;
    let drift = fwd.max_p_drift();
    let back = hamilton_flow(&g, fwd.last(), &FlowOptions::new(-10.0))?;
    let rev = back.last().x.iter().zip(&start.x).chain(back.last().xi.iter().zip(&start.xi)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let slope = |xi: &[f64]| [-xi[1] / xi[0], -xi[2] / xi[0]];
    let reference = rk4_reference(&g, &start, 10.0, 4000);
    let (s_ad, s_ref) = (slope(&fwd.last().xi), slope(&reference[3..]));
    let slope_err = (s_ad[0] - s_ref[0]).abs().max((s_ad[1] - s_ref[1]).abs());
    let crossed = fwd.samples.iter().any(|q| g.is_perturbed_at(&q.x)) && !g.is_perturbed_at(&fwd.last().x);
    Ok(outcome(
        drift <= 1e-9 && rev <= 1e-8 && slope_err <= 1e-6 && crossed,
        format!("|p| drift {drift:.1e} (≤ 1e-9), reversibility {rev:.1e} (≤ 1e-8), exit slope vs RK4 {slope_err:.1e} (≤ 1e-6)"),
    ))
}

fn wavefront() -> Res<Outcome> {
    let setup = WavefrontSetup::standard()?;
    let (probes, allowed, forbidden) = setup.standard_probes()?;
    let rep = wavefront_experiment(&setup, &probes, vec![allowed, forbidden])?;
    let c32 = *rep.contrast.last().unwrap();
    let ell = rep.elliptic_exponent.unwrap();
    let labels = rep.probes.iter().all(|r| match r.probe.kind {
        lorentzian_lab::microlocal::ProbeKind::Allowed => r.in_lambda,
        lorentzian_lab::microlocal::ProbeKind::Forbidden => !r.in_lambda,
        _ => true,
    });
    Ok(outcome(
        c32 >= 100.0 && rep.contrast_monotone && ell <= -4.0 && labels,
        format!(
            "contrast {:?} (κ=32 ≥ 100, non-decreasing: {}), elliptic exponent {ell:.2} (≤ −4)",
            rep.contrast.iter().map(|c| format!("{c:.3e}")).collect::<Vec<_>>(),
            rep.contrast_monotone
        ),
    ))
}

fn heat_oracle() -> Res<Outcome> {
    let s = analytic_spectrum(&RiemannianModel::round_sphere(3, 1.0)?, 80)?;
    let hs = local_heat_coefficients(&s, 3, &X[1..], 4)?;
    let t = analytic_spectrum(&RiemannianModel::flat_torus(&[2.0 * PI; 3])?, 80)?;
    let ht = local_heat_coefficients(&t, 3, &X[1..], 4)?;
    let (e0, e1) = ((hs.a[0] - 1.0).abs(), (hs.a[1] - 1.0).abs());
    Ok(outcome(
        e0 <= 0.02 && e1 <= 0.01 && ht.a[1].abs() <= 1e-3,
        format!("S³ a₀ = {:.6} (±2%), a₁ = {:.6} (±1%), torus a₁ = {:.1e} (≤ 1e-3)", hs.a[0], hs.a[1], ht.a[1]),
    ))
}

fn main() {
    let criteria: Vec<(&str, &str, u64, fn() -> Res<Outcome>)> = vec![
        ("1", "residue formula on ℝ×S³ with flat control", 60, residue_formula),
        ("2", "residue radius scaling", 120, radius_scaling),
        ("3", "resolvent route equivalence", 10, route_equivalence),
        ("4", "self-adjointness consequences", 30, selfadjointness),
        ("5", "outgoing condition", 30, outgoing),
        ("6", "accretivity and square root", 60, accretivity),
        ("7", "bicharacteristic integrity", 60, bicharacteristics),
        ("8", "Feynman wavefront contrast", 300, wavefront),
        ("9", "heat-coefficient oracle", 10, heat_oracle),
    ];
    let mut failures = 0;
    for (id, name, budget, f) in criteria {
        let t = Instant::now();
        let r = f();
        let el = t.elapsed();
        let in_budget = el <= Duration::from_secs(budget);
        let (passed, detail) = match r {
            Ok(o) => (o.passed && in_budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} criterion {id} {name}: {detail}; runtime {:.2}s (budget {budget}s{})",
            if passed { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            if in_budget { "" } else { ", exceeded" }
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
