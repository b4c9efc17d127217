use super::cache::content_hash;
use super::plot::{heatmap, line_plot, Series};
use super::report::{num, Table};
use super::{build_grid, build_metric, spatial_model, Ctx};
use crate::error::{Error, Result};
use crate::geometry::{analytic_spectrum, assemble_laplace_beltrami, sphere_volume, spectrum as grid_spectrum, weighted_dot, ModelKind, RiemannianModel, SpectralData};
use crate::grid::SpatialGrid;
use crate::microlocal::{CotangentPoint, Probe, ProbeKind, WavePacket, WavefrontSetup};
use crate::resolvent::{
    accretive_sqrt, direct_resolvent_apply, outgoing_residual, weighted_norm, DirectResolvent, ModalResolvent, Side, StaticSpatialOperator,
    TimeKernel, C64,
};
use crate::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use crate::waveop::{perturbed_pair, symmetry_residual, DiscreteWaveOperator, SpacetimeGrid, TimeMode};
use crate::zeta::{check_pole_formula, pole_rhs, PoleFormulaParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `Im z · ‖R(z)f‖ / ‖f‖` may exceed one by at most this much.
const NORM_SLACK: f64 = 1e-6;

fn rel_diff(w: &[f64], a: &[C64], b: &[C64]) -> f64 {
    let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    weighted_norm(w, &d) / weighted_norm(w, b).max(1e-300)
}

/// `‖(P − z)u − f‖_w / ‖f‖_w` on rows whose stencil stays inside the grid.
fn operator_residual(p: &DiscreteWaveOperator, z: C64, u: &[C64], f: &[C64]) -> f64 {
    let pu = p.matrix.mul_cvec(u);
    let (ns, nt) = (p.grid.ns(), p.grid.nt());
    let (mut num, mut den) = (0.0, 0.0);
    for r in 0..u.len() {
        let it = r / ns;
        if p.grid.mode == TimeMode::Line && (it == 0 || it + 1 == nt) {
            continue;
        }
        num += p.weight[r] * (pu[r] - z * u[r] - f[r]).norm_sqr();
        den += p.weight[r] * f[r].norm_sqr();
    }
    (num / den.max(1e-300)).sqrt()
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

/// Smooth source supported in `|t| ≤ half_width`: a bump in time times a
/// seeded low-frequency spatial profile.
pub(crate) fn pulse_source(st: &SpacetimeGrid, half_width: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sg = &st.spatial;
    let terms: Vec<(usize, f64, f64, f64)> = (0..sg.dim())
        .flat_map(|a| (1..=3).map(move |m| (a, m as f64)))
        .map(|(a, m)| (a, m, rng.random::<f64>() - 0.5, 2.0 * PI * rng.random::<f64>()))
        .collect();
    let profile: Vec<C64> = (0..sg.len())
        .map(|is| {
            let y = sg.coords(is);
            let mut v = c(0.3, 0.1);
            for &(a, m, amp, ph) in &terms {
                v += amp * (2.0 * PI * m * y[a] / sg.extent(a) + ph).cos();
            }
            v
        })
        .collect();
    let mut f = vec![c(0.0, 0.0); st.len()];
    for it in 0..st.nt() {
        let s = st.time(it) / half_width;
        if s.abs() < 1.0 {
            let b = (-1.0 / (1.0 - s * s)).exp();
            for (is, p) in profile.iter().enumerate() {
                f[it * sg.len() + is] = p * b;
            }
        }
    }
    f
}

/// Grid eigen-data of `−Δ_h`, through the cache.
fn cached_spectrum(ctx: &mut Ctx, model: &RiemannianModel, sg: &SpatialGrid, count: usize) -> Result<SpectralData> {
    let key = content_hash(&("laplace-beltrami-spectrum/1", model, sg, count));
    let cache = ctx.cache()?;
    let (sp, outcome) = ctx.timed("spectrum", |_| {
        cache.spectrum(&key, || {
            let lb = assemble_laplace_beltrami(model, sg)?;
            grid_spectrum(&lb, count)
        })
    })?;
    ctx.report.cache.push(super::report::CacheEvent { key, outcome });
    Ok(sp)
}

fn dump_operator(ctx: &Ctx, m: &crate::sparse::Csr) -> Result<()> {
    if let Some(path) = &ctx.opts.dump_operator {
        let f = std::fs::File::create(path).map_err(|e| Error::from(e).context(format!("creating {}", path.display())))?;
        m.write_matrix_market(std::io::BufWriter::new(f)).map_err(|e| Error::from(e).context("writing operator dump"))?;
    }
    Ok(())
}

fn z_label(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

pub(crate) fn spectrum(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (model, sg) = spatial_model(cfg)?;
    let mut table = Table::new("spectrum", &["index", "eigenvalue", "multiplicity"]);
    let Some(sg) = sg else {
        let cutoff = if cfg.experiment.spectrum.count == 0 { 40 } else { cfg.experiment.spectrum.count };
        let sp = ctx.timed("spectrum", |_| analytic_spectrum(&model, cutoff))?;
        let crate::geometry::Eigenfunctions::Analytic { multiplicity, complete_below, .. } = &sp.eigenfunctions else { unreachable!() };
        for (k, (l, m)) in sp.eigenvalues.iter().zip(multiplicity).enumerate() {
            table.push([k.to_string(), num(*l), m.to_string()]);
        }
        // Weyl counting N(λ) ≈ ω_d vol λ^{d/2} / (2π)^d below the completeness edge
        let d = model.dim as f64;
        let lam = sp.eigenvalues.iter().cloned().filter(|l| *l < *complete_below).fold(0.0, f64::max);
        let count: u64 = sp.eigenvalues.iter().zip(multiplicity).filter(|(l, _)| **l <= lam).map(|(_, m)| *m).sum();
        let ball = PI.powf(0.5 * d) / crate::special::gamma_real(0.5 * d + 1.0);
        let ModelKind::RoundSphere { radius, .. } = model.kind else { unreachable!() };
        let weyl = ball * sphere_volume(model.dim, radius) * lam.powf(0.5 * d) / (2.0 * PI).powf(d);
        ctx.report.at_most("weyl counting relative deviation", (count as f64 / weyl - 1.0).abs(), 0.05, false);
        ctx.report.summary = json!({ "kind": "analytic", "levels": sp.eigenvalues.len(), "modes": count, "weyl": weyl });
        if let Some(p) = ctx.plot_path("spectrum.svg") {
            let pts = sp.eigenvalues.iter().enumerate().map(|(k, l)| (k as f64, *l)).collect();
            line_plot(&p, "eigenvalue levels", "level k", "λ_k", &[Series { label: "λ_k", points: pts }], false)?;
        }
        ctx.report.tables.push(table);
        return Ok(());
    };
    let lb = assemble_laplace_beltrami(&model, &sg)?;
    dump_operator(ctx, &lb.matrix)?;
    let count = if cfg.experiment.spectrum.count == 0 { sg.len() } else { cfg.experiment.spectrum.count.min(sg.len()) };
    let sp = cached_spectrum(ctx, &model, &sg, count)?;
    let sym = symmetry_residual(&lb.matrix, &lb.weight, 20, cfg.seed);
    ctx.report.at_most("laplacian weighted symmetry", sym, 1e-12, true);
    let vecs = sp.vectors().unwrap();
    let w = &lb.weight;
    let gram = vecs
        .iter()
        .enumerate()
        .flat_map(|(i, a)| vecs.iter().enumerate().map(move |(j, b)| (weighted_dot(w, a, b) - if i == j { 1.0 } else { 0.0 }).abs()))
        .fold(0.0, f64::max);
    ctx.report.at_most("eigenvector orthonormality", gram, 1e-10, true);
    let lmax = sp.eigenvalues.iter().cloned().fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for (l, v) in sp.eigenvalues.iter().zip(vecs) {
        let r: Vec<f64> = lb.matrix.mul_vec(v).iter().zip(v).map(|(a, b)| -a - l * b).collect();
        worst = worst.max(weighted_dot(w, &r, &r).sqrt() / lmax);
    }
    ctx.report.at_most("eigenpair residual", worst, 1e-10, true);
    let lmin = sp.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    ctx.report.at_least("spectral nonnegativity", lmin / lmax, -1e-10, true);
    if let (ModelKind::FlatTorus { periods }, 1) = (&model.kind, model.dim) {
        let n = sg.nodes[0];
        let dy = periods[0] / n as f64;
        let mut exact: Vec<f64> = (0..n).map(|k| 2.0 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()) / (dy * dy)).collect();
        exact.sort_by(f64::total_cmp);
        let dev = sp.eigenvalues.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / lmax;
        ctx.report.at_most("stencil eigenvalues closed form", dev, 1e-10, true);
    }
    for (k, l) in sp.eigenvalues.iter().enumerate() {
        table.push([k.to_string(), num(*l), "1".into()]);
    }
    ctx.report.summary = json!({
        "kind": "grid",
        "nodes": sg.len(),
        "count": count,
        "lowest": sp.eigenvalues.iter().take(8).collect::<Vec<_>>(),
    });
    if let Some(p) = ctx.plot_path("spectrum.svg") {
        let pts = sp.eigenvalues.iter().enumerate().map(|(k, l)| (k as f64, *l)).collect();
        line_plot(&p, "spectrum of −Δ_h", "index k", "λ_k", &[Series { label: "λ_k", points: pts }], false)?;
    }
    ctx.report.tables.push(table);
    Ok(())
}

/// Spectral route for the unperturbed operator of `g`.
fn spectral_route(ctx: &mut Ctx, g: &LorentzianMetric, st: &SpacetimeGrid, z: C64, kind: TimeKernel) -> Result<ModalResolvent> {
    match g.background.beta {
        BetaField::Constant(b) => {
            let sp = cached_spectrum(ctx, &g.background.model, &st.spatial, st.ns())?;
            ModalResolvent::from_spectrum(&sp, b, z, st, kind)
        }
        _ => {
            let op = StaticSpatialOperator::new(&g.background, &st.spatial)?;
            ModalResolvent::from_static_operator(&op, z, st, kind)
        }
    }
}

pub(crate) fn resolvent_check(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let rc = &cfg.experiment.resolvent;
    let g = build_metric(cfg)?;
    let st = build_grid(cfg)?;
    let z = c(cfg.solver.z[0], cfg.solver.z[1]);
    let kind = if cfg.solver.kernel == "discrete" { TimeKernel::Discrete } else { TimeKernel::Continuum };
    let route = cfg.solver.route.as_str();
    let g0 = LorentzianMetric::new(g.background.clone(), None)?;
    let (p, p0) = perturbed_pair(&g, &st)?;
    dump_operator(ctx, &p.matrix)?;
    let w = p0.weight.clone();
    let f = pulse_source(&st, rc.source_half_width, cfg.seed);
    let fnorm = weighted_norm(&w, &f);
    let mut table = Table::new("residuals", &["quantity", "route", "value", "tolerance"]);
    let row = |t: &mut Table, q: &str, r: &str, v: f64, tol: f64| t.push([q.to_string(), r.to_string(), num(v), num(tol)]);

    let mut spectral = None;
    if route != "direct" {
        let modal = ctx.timed("spectral route", |c| spectral_route(c, &g, &st, z, kind))?;
        let u = modal.apply(&f)?;
        let res = operator_residual(&p0, z, &u, &f);
        let gated = kind == TimeKernel::Discrete;
        ctx.report.at_most("spectral route residual", res, 1e-8, gated);
        row(&mut table, "residual", "spectral", res, 1e-8);
        let margin = z.im * weighted_norm(&w, &u) / fnorm;
        ctx.report.at_most("spectral norm bound Im z·‖u‖/‖f‖", margin, 1.0 + NORM_SLACK, true);
        row(&mut table, "norm ratio", "spectral", margin, 1.0 + NORM_SLACK);
        spectral = Some((modal, u));
    }
    let mut direct_u0 = None;
    if route != "spectral" {
        let d0 = ctx.timed("direct route (unperturbed)", |_| DirectResolvent::new(&g0, &st, z))?;
        let u0 = direct_resolvent_apply(&d0, &f)?;
        let res = d0.residual(&u0, &f);
        ctx.report.at_most("direct route residual (unperturbed)", res, cfg.solver.residual_tol, true);
        row(&mut table, "residual", "direct-unperturbed", res, cfg.solver.residual_tol);
        direct_u0 = Some(u0);
    }
    if let (Some((_, us)), Some(ud)) = (&spectral, &direct_u0) {
        let agree = rel_diff(&w, us, ud);
        // on the line lattice the direct background is itself modal, so only the periodic box is an independent comparison
        ctx.report.at_most("route agreement", agree, rc.agreement_tol, kind == TimeKernel::Discrete && st.mode == TimeMode::Periodic);
        row(&mut table, "route agreement", "both", agree, rc.agreement_tol);
    }
    let mut u_full = spectral.as_ref().map(|s| s.1.clone());
    if g.perturbation.is_some() && route != "spectral" {
        let d = ctx.timed("direct route", |_| DirectResolvent::new(&g, &st, z))?;
        let u = direct_resolvent_apply(&d, &f)?;
        let res = d.residual(&u, &f);
        ctx.report.at_most("direct route residual", res, cfg.solver.residual_tol, true);
        row(&mut table, "residual", "direct", res, cfg.solver.residual_tol);
        let margin = z.im * weighted_norm(&w, &u) / fnorm;
        ctx.report.at_most("direct norm bound Im z·‖u‖/‖f‖", margin, 1.0 + NORM_SLACK, true);
        row(&mut table, "norm ratio", "direct", margin, 1.0 + NORM_SLACK);
        u_full = Some(u);
    } else if u_full.is_none() {
        u_full = direct_u0.clone();
    }
    let u = u_full.expect("at least one route ran");
    let mut summary = json!({ "z": [z.re, z.im], "route": route, "grid": [st.nt(), st.ns()], "mode": format!("{:?}", st.mode) });

    // outgoing identities need the line lattice and the background generator
    if st.mode == TimeMode::Line {
        if let Some((modal, _)) = &spectral {
            let t_pert = g.perturbation.as_ref().map_or(0.0, Perturbation::support_time_bound);
            let t_out = t_pert.max(rc.source_half_width) + 2.0 * st.dt();
            let plus = outgoing_residual(&u, modal, 1.0)?;
            let minus = outgoing_residual(&u, modal, -1.0)?;
            let fut = plus.max_beyond(t_out, Side::Future);
            let past = minus.max_beyond(t_out, Side::Past);
            let wrong = plus.min_beyond(t_out, Side::Past).min(minus.min_beyond(t_out, Side::Future));
            let gated = kind == TimeKernel::Discrete;
            ctx.report.at_most("outgoing residual t > T_out", fut, rc.outgoing_tol, gated);
            ctx.report.at_most("outgoing residual t < −T_out", past, rc.outgoing_tol, gated);
            ctx.report.at_least("wrong-sign residual", wrong, 0.1, gated);
            row(&mut table, "outgoing future", "D_t + A", fut, rc.outgoing_tol);
            row(&mut table, "outgoing past", "D_t − A", past, rc.outgoing_tol);
            row(&mut table, "wrong sign", "min", wrong, 0.1);
            let mut prof = Table::new("outgoing", &["t", "plus", "minus"]);
            for ((t, a), b) in plus.times.iter().zip(&plus.residual).zip(&minus.residual) {
                prof.push([num(*t), num(*a), num(*b)]);
            }
            ctx.report.tables.push(prof);
            summary["t_out"] = json!(t_out);
            if let Some(path) = ctx.plot_path("outgoing.svg") {
                let s1 = Series { label: "‖(D_t + A)u‖/‖u‖", points: plus.times.iter().cloned().zip(plus.residual.iter().cloned()).collect() };
                let s2 = Series { label: "‖(D_t − A)u‖/‖u‖", points: minus.times.iter().cloned().zip(minus.residual.iter().cloned()).collect() };
                line_plot(&path, "outgoing residual per time slice", "t", "relative residual", &[s1, s2], true)?;
            }
        }
    }
    if st.spatial.dim() == 1 {
        if let Some(path) = ctx.plot_path("kernel.svg") {
            let ns = st.ns();
            let vals: Vec<Vec<f64>> = (0..st.nt()).map(|it| (0..ns).map(|is| u[it * ns + is].norm()).collect()).collect();
            let sg = &st.spatial;
            let yr = (sg.origin[0], sg.origin[0] + sg.extent(0));
            let tr = (st.time(0), st.time(0) + st.time_length());
            heatmap(&path, "|(P − z)⁻¹ f|", ("y", "t"), &vals, yr, tr, &[])?;
        }
    }
    ctx.report.summary = summary;
    ctx.report.tables.push(table);
    Ok(())
}

/// `β` used for the accretivity check: the configured cosine profile, or a
/// default with `inf β ≈ 0.51`, `sup β ≈ 1.79`.
fn accretive_beta(cfg: &super::ExperimentConfig) -> BetaField {
    match super::beta_field(cfg) {
        b @ BetaField::Cosine { .. } if cfg.metric.dim == 1 => b,
        _ => BetaField::Cosine { mean: 1.15, amplitude: 0.64, wavenumber: 1.0, axis: 0 },
    }
}

pub(crate) fn selfadjoint(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let sa = &cfg.experiment.selfadjoint;
    let g = build_metric(cfg)?;
    let st = build_grid(cfg)?;
    let (p, _) = perturbed_pair(&g, &st)?;
    dump_operator(ctx, &p.matrix)?;
    let sym = symmetry_residual(&p.matrix, &p.weight, 20, cfg.seed);
    ctx.report.at_most("weighted symmetry residual", sym, sa.symmetry_tol, true);
    let w = p.weight.clone();
    let zs: Vec<C64> = sa.z_list.iter().map(|z| c(z[0], z[1])).collect();
    let solvers = ctx.timed("factorize", |_| zs.iter().map(|&z| DirectResolvent::new(&g, &st, z)).collect::<Result<Vec<_>>>())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new("selfadjoint", &["z", "trial", "norm_ratio", "residual"]);
    let mut ratios = Vec::new();
    let t = std::time::Instant::now();
    for (z, d) in zs.iter().zip(&solvers) {
        let mut worst = 0.0f64;
        for trial in 0..sa.trials {
            let f = random_field(st.len(), &mut rng);
            let u = direct_resolvent_apply(d, &f)?;
            let ratio = z.im * weighted_norm(&w, &u) / weighted_norm(&w, &f);
            worst = worst.max(ratio);
            table.push([z_label(*z), trial.to_string(), num(ratio), num(d.residual(&u, &f))]);
        }
        ctx.report.at_most(&format!("norm bound z = {}", z_label(*z)), worst, 1.0 + NORM_SLACK, true);
        ratios.push(worst);
    }
    ctx.report.time("norm bound", t.elapsed().as_secs_f64());
    // R(z₁) − R(z₂) = (z₁ − z₂) R(z₁) R(z₂); only an identity on the periodic box
    let mut ident = 0.0f64;
    for i in 0..solvers.len() {
        for j in i + 1..solvers.len() {
            for _ in 0..5 {
                let f = random_field(st.len(), &mut rng);
                let a = solvers[i].solve_unchecked(&f)?;
                let b = solvers[j].solve_unchecked(&f)?;
                let ab = solvers[i].solve_unchecked(&b)?;
                let lhs: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                let rhs: Vec<C64> = ab.iter().map(|v| v * (zs[i] - zs[j])).collect();
                ident = ident.max(rel_diff(&w, &lhs, &rhs));
            }
        }
    }
    if solvers.len() > 1 {
        ctx.report.at_most("resolvent identity", ident, sa.identity_tol, st.mode == TimeMode::Periodic);
    }

    // accretivity of L(z) and the square root A(z) on a variable-β circle
    let z = c(cfg.solver.z[0], cfg.solver.z[1]);
    let beta = accretive_beta(cfg);
    let circle = SpatialGrid::periodic_box(&[sa.accretive_nodes], &[2.0 * PI], &[0.0])?;
    let bg = StaticMetric::new(beta.clone(), RiemannianModel::flat_torus(&[2.0 * PI])?);
    let op = StaticSpatialOperator::new(&bg, &circle)?;
    let (bmin, bmax) = op.beta.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let cst = bmin.min(1.0 / bmax);
    let root = ctx.timed("accretive root", |_| accretive_sqrt(&op.l_of_z(z), z, sa.accretive_samples, cfg.seed))?;
    ctx.report.at_least("accretivity margin ≥ ½C⁻¹·Im z", root.margin, 0.5 / cst * z.im, true);
    ctx.report.at_least("accretivity margin ≥ C·Im z", root.margin, cst * z.im, true);
    ctx.report.at_most("A(z)² = e^{−iπ/2}L(z)", root.square_defect, 1e-10, true);
    ctx.report.at_least("min singular value of A(z)", root.min_singular, 1e-12, true);
    // β = 1: A(z) = Φ diag(√(λ_k − z)) Φᵀ in symmetrized coordinates
    let small = SpatialGrid::periodic_box(&[32], &[2.0 * PI], &[0.0])?;
    let flat = RiemannianModel::flat_torus(&[2.0 * PI])?;
    let op1 = StaticSpatialOperator::new(&StaticMetric::ultrastatic(flat.clone()), &small)?;
    let r1 = accretive_sqrt(&op1.l_of_z(z), z, 10, cfg.seed)?;
    let sp = cached_spectrum(ctx, &flat, &small, 32)?;
    let (vecs, sw) = (sp.vectors().unwrap(), sp.weight().unwrap());
    let n = small.len();
    let mut want = crate::linalg::CMat::zeros(n, n);
    for (k, lam) in sp.eigenvalues.iter().enumerate() {
        let s = (c(*lam, 0.0) - z).sqrt();
        for i in 0..n {
            for j in 0..n {
                want[(i, j)] += s * vecs[k][i] * sw[i].sqrt() * vecs[k][j] * sw[j].sqrt();
            }
        }
    }
    let red = (&r1.a - &want).norm() / want.norm();
    ctx.report.at_most("unit-β root matches mode formula", red, 1e-10, true);
    ctx.report.summary = json!({
        "z_list": sa.z_list,
        "worst_norm_ratio": ratios,
        "symmetry_residual": sym,
        "resolvent_identity": ident,
        "beta": { "min": bmin, "max": bmax, "C": cst },
        "accretivity_margin": root.margin,
        "square_defect": root.square_defect,
        "unit_beta_reduction": red,
    });
    ctx.report.tables.push(table);
    if let Some(path) = ctx.plot_path("norm_ratio.svg") {
        let series: Vec<Series> = zs
            .iter()
            .enumerate()
            .map(|(i, _)| Series {
                label: ["z₁", "z₂", "z₃", "z₄", "z₅"][i % 5],
                points: ctx.report.tables[0].rows.iter().filter(|r| r[0] == z_label(zs[i])).map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap())).collect(),
            })
            .collect();
        line_plot(&path, "Im z · ‖R(z)f‖ / ‖f‖", "trial", "ratio", &series, false)?;
    }
    Ok(())
}

/// Probe file: one `t y τ η` per line; `#` starts a comment.
pub fn read_probe_file(path: &std::path::Path) -> Result<Vec<Probe>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|ch: char| ch.is_whitespace() || ch == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Schema { field: format!("{}:{}", path.display(), i + 1), expected: "four numbers t y τ η".into(), actual: e.to_string() })?;
        if v.len() != 4 {
            return Err(Error::Schema { field: format!("{}:{}", path.display(), i + 1), expected: "four numbers t y τ η".into(), actual: format!("{} values", v.len()) });
        }
        out.push(Probe { label: format!("probe-{}", out.len() + 1), kind: ProbeKind::Custom, point: CotangentPoint::new(&v[..2], &v[2..]) });
    }
    Ok(out)
}

pub(crate) fn wavefront(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let wc = &cfg.experiment.wavefront;
    let mut setup = WavefrontSetup::sized(wc.nodes, wc.length)?;
    if let (Some(pc), 1) = (&cfg.metric.perturbation, cfg.metric.dim) {
        let bg = StaticMetric::new(super::beta_field(cfg), RiemannianModel::flat_torus(&[wc.length])?);
        setup.metric = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&pc.center, &pc.half_widths, pc.amplitude)))?;
    }
    setup.z = c(cfg.solver.z[0], cfg.solver.z[1]);
    setup.source = CotangentPoint::new(&wc.source[..2], &wc.source[2..]);
    setup.kappas = wc.scales.clone();
    setup.aspect = wc.aspect;
    setup.separation = wc.separation;
    setup.elliptic_offset = wc.elliptic_offset;
    setup.tolerance_angle = wc.tolerance_angle;
    let (mut probes, allowed, forbidden) = ctx.timed("rays", |_| setup.standard_probes())?;
    if let Some(file) = &wc.probes {
        probes.extend(read_probe_file(file)?);
    }
    let rep = ctx.timed("wavefront solves", |_| crate::microlocal::wavefront_experiment(&setup, &probes, vec![allowed, forbidden]))?;
    let kmax = rep.kappas.len() - 1;
    let contrast = rep.contrast.get(kmax).copied().unwrap_or(f64::NAN);
    ctx.report.at_least(&format!("contrast at κ = {}", rep.kappas[kmax]), contrast, 100.0, true);
    ctx.report.check("contrast non-decreasing in κ", rep.contrast_monotone, f64::from(u8::from(rep.contrast_monotone)), 1.0, true, format!("{:?}", rep.contrast));
    let ell = rep.elliptic_exponent.unwrap_or(f64::NAN);
    ctx.report.at_most("elliptic decay exponent", ell, -4.0, true);
    let worst = rep.source_residuals.iter().cloned().fold(0.0, f64::max);
    ctx.report.at_most("source solve residual", worst, cfg.solver.residual_tol, true);
    for r in &rep.probes {
        match r.probe.kind {
            ProbeKind::Allowed => ctx.report.check("allowed probe in Λ", r.in_lambda, 1.0, 1.0, true, r.reason.clone()),
            ProbeKind::Forbidden => ctx.report.check("forbidden probe outside Λ", !r.in_lambda, 0.0, 0.0, true, r.reason.clone()),
            ProbeKind::Diagonal => ctx.report.check("diagonal probe in Λ", r.in_lambda, 1.0, 1.0, false, r.reason.clone()),
            _ => {}
        }
    }
    let mut table = Table::new("wavefront", &["probe", "kind", "t", "y", "tau", "eta", "in_lambda", "kappa", "energy"]);
    for r in &rep.probes {
        let pt = &r.probe.point;
        for (k, e) in rep.kappas.iter().zip(&r.energies) {
            table.push([
                r.probe.label.clone(),
                format!("{:?}", r.probe.kind),
                num(pt.x[0]),
                num(pt.x[1]),
                num(pt.xi[0]),
                num(pt.xi[1]),
                r.in_lambda.to_string(),
                num(*k),
                num(*e),
            ]);
        }
    }
    ctx.report.tables.push(table);
    ctx.report.summary = json!({
        "kappas": rep.kappas,
        "contrast": rep.contrast,
        "contrast_monotone": rep.contrast_monotone,
        "elliptic_exponent": rep.elliptic_exponent,
        "source_residuals": rep.source_residuals,
        "probes": rep.probes.iter().map(|r| json!({"label": r.probe.label, "in_lambda": r.in_lambda, "exponent": r.exponent, "reason": r.reason})).collect::<Vec<_>>(),
    });
    if let Some(path) = ctx.plot_path("energies.svg") {
        let series: Vec<Series> = rep
            .probes
            .iter()
            .map(|r| Series { label: r.probe.label.as_str(), points: rep.kappas.iter().cloned().zip(r.energies.iter().cloned()).collect() })
            .collect();
        line_plot(&path, "probe packet energy", "κ", "energy", &series, true)?;
    }
    if let Some(path) = ctx.plot_path("rays.svg") {
        let solver = DirectResolvent::new(&setup.metric, &setup.grid, setup.z)?;
        let src = WavePacket::with_aspect(&setup.source.x, &setup.source.xi, rep.kappas[0], setup.aspect)?;
        let u = direct_resolvent_apply(&solver, &src.sample(&setup.grid)?)?;
        let ns = setup.grid.ns();
        let vals: Vec<Vec<f64>> = (0..setup.grid.nt()).map(|it| (0..ns).map(|is| u[it * ns + is].norm()).collect()).collect();
        let sg = &setup.grid.spatial;
        let yr = (sg.origin[0], sg.origin[0] + sg.extent(0));
        let tr = (setup.grid.time(0), setup.grid.time(0) + setup.grid.time_length());
        let overlays: Vec<Series> = rep
            .rays
            .iter()
            .zip(["allowed ray", "forbidden ray"])
            .map(|(ray, label)| Series { label, points: ray.samples.iter().map(|p| (p.x[1], p.x[0])).collect() })
            .collect();
        heatmap(&path, "|u| with bicharacteristics", ("y", "t"), &vals, yr, tr, &overlays)?;
    }
    Ok(())
}

pub(crate) fn zeta_residue(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let zc = &cfg.experiment.zeta;
    let model = if zc.manifold == "sphere" { RiemannianModel::round_sphere(3, zc.radius)? } else { RiemannianModel::flat_torus(&zc.periods)? };
    let g = LorentzianMetric::new(StaticMetric::ultrastatic(model), None)?;
    let mut params = PoleFormulaParams { cutoffs: zc.cutoffs.clone(), epsilons: zc.epsilons.clone(), radius: zc.alpha_window, points: zc.alpha_points, heat_terms: zc.heat_terms, ..Default::default() };
    params.cutoffs.sort_unstable();
    let rep = ctx.timed("pole formula", |_| check_pole_formula(&g, &zc.point, &params))?;
    let sphere = zc.manifold == "sphere";
    if sphere {
        ctx.report.at_most("residue relative error", rep.relative_error.unwrap_or(f64::INFINITY), zc.rel_tol, true);
        let a1 = 1.0 / (zc.radius * zc.radius);
        ctx.report.at_most("heat coefficient a0", (rep.heat.a[0] - 1.0).abs(), 0.02, true);
        ctx.report.at_most("heat coefficient a1", (rep.heat.a[1] - a1).abs() / a1, 0.01, true);
    } else {
        let reference = pole_rhs(6.0, 4).norm();
        ctx.report.at_most("flat control |LHS| / |unit-sphere RHS|", rep.lhs.norm() / reference, 1e-3, true);
        ctx.report.at_most("heat coefficient a1", rep.heat.a[1].abs(), 1e-3, true);
    }
    ctx.report.check("pole-fit and heat routes agree", rep.residues.agree, (rep.residues.pole_fit.value - rep.residues.heat.value).norm(), 0.0, false, "within combined error bars".into());
    let pf = &rep.residues.pole_fit;
    let spread = (pf.richardson_two - pf.richardson_three).norm() / pf.richardson_three.norm().max(1e-300);
    ctx.report.at_most("Richardson 2-point vs 3-point", spread, 0.01, false);

    let mut samples = Table::new("zeta_samples", &["cutoff", "alpha_re", "alpha_im", "epsilon", "re", "im"]);
    let mut per_cut = Vec::new();
    for &cut in &params.cutoffs {
        let sp = analytic_spectrum(&g.background.model, cut)?;
        let s = crate::zeta::zeta_samples(&sp, 3, &zc.point, cut, &params.epsilons, params.radius, params.points, &params.continuation)?;
        for (a, row) in s.alphas.iter().zip(&s.values) {
            for (e, v) in s.epsilons.iter().zip(row) {
                samples.push([cut.to_string(), num(a.re), num(a.im), num(*e), num(v.re), num(v.im)]);
            }
        }
        per_cut.push(s);
    }
    let mut residues = Table::new("residues", &["route", "epsilon", "re", "im"]);
    for (route, est) in [("pole-fit", &rep.residues.pole_fit), ("heat", &rep.residues.heat)] {
        for (e, v) in est.epsilons.iter().zip(&est.per_epsilon) {
            residues.push([route.into(), num(*e), num(v.re), num(v.im)]);
        }
        residues.push([route.into(), "0".into(), num(est.value.re), num(est.value.im)]);
    }
    residues.push(["rhs".into(), "0".into(), num(rep.rhs.re), num(rep.rhs.im)]);
    ctx.report.tables.push(samples);
    ctx.report.tables.push(residues);
    ctx.report.summary = json!({
        "manifold": zc.manifold,
        "point": rep.point,
        "lhs": [rep.lhs.re, rep.lhs.im],
        "rhs": [rep.rhs.re, rep.rhs.im],
        "scalar_curvature": rep.scalar_curvature,
        "relative_error": rep.relative_error,
        "absolute_error": rep.absolute_error,
        "heat_coefficients": rep.heat.a,
        "pole_fit": { "value": [pf.value.re, pf.value.im], "error_bar": pf.error_bar, "per_cutoff": pf.per_cutoff.iter().map(|v| [v.re, v.im]).collect::<Vec<_>>() },
        "heat_route": { "value": [rep.residues.heat.value.re, rep.residues.heat.value.im], "error_bar": rep.residues.heat.error_bar },
        "routes_agree": rep.residues.agree,
    });
    if let Some(path) = ctx.plot_path("residue_convergence.svg") {
        let im = |est: &crate::zeta::ResidueEstimate| -> Vec<(f64, f64)> {
            let mut v: Vec<(f64, f64)> = est.epsilons.iter().cloned().zip(est.per_epsilon.iter().map(|z| z.im)).collect();
            v.push((0.0, est.value.im));
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        };
        let emax = params.epsilons.iter().cloned().fold(0.0, f64::max);
        let series = [
            Series { label: "pole fit (Im)", points: im(&rep.residues.pole_fit) },
            Series { label: "heat coefficients (Im)", points: im(&rep.residues.heat) },
            Series { label: "R_g / (i·6·(4π)²) (Im)", points: vec![(0.0, rep.rhs.im), (emax, rep.rhs.im)] },
        ];
        line_plot(&path, "residue vs regulator ε", "ε", "Im residue", &series, false)?;
    }
    Ok(())
}
