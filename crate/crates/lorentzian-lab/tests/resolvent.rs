use lorentzian_lab::geometry::{assemble_laplace_beltrami, spectrum, RiemannianModel};
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::linalg::CMat;
use lorentzian_lab::resolvent::*;
use lorentzian_lab::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::{perturbed_pair, SpacetimeGrid};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(n: usize, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
}

fn rel(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn flat_setup(ns: usize, nt: usize, period: f64, tlen: f64) -> (SpatialGrid, SpacetimeGrid, SpectralDataOwned) {
    let sg = SpatialGrid::periodic_box(&[ns], &[period], &[0.0]).unwrap();
    let st = SpacetimeGrid::periodic(nt, tlen, &sg).unwrap();
    let model = RiemannianModel::flat_torus(&[period]).unwrap();
    let lb = assemble_laplace_beltrami(&model, &sg).unwrap();
    let sp = spectrum(&lb, ns).unwrap();
    (sg, st, sp)
}
type SpectralDataOwned = lorentzian_lab::geometry::SpectralData;

#[test]
fn discrete_kernel_inverts_lattice_operator() {
    let dt = 0.1;
    for mu in [C::new(3.0, -1.0), C::new(-0.5, -0.2), C::new(390.0, -0.5), C::new(0.0, -1.0)] {
        let k = mode_kernel(mu, dt, TimeKernel::Discrete);
        assert!(k.rho.norm() < 1.0);
        let g = |m: i64| k.scale * k.rho.powu(m.unsigned_abs() as u32);
        for m in -3i64..=3 {
            let v = (g(m + 1) - 2.0 * g(m) + g(m - 1)) / (dt * dt) + mu * g(m);
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-10, "mu={mu} m={m} v={v}");
        }
    }
}

#[test]
fn periodic_images_match_closed_form() {
    let k = mode_kernel(C::new(2.0, -0.3), 0.05, TimeKernel::Discrete);
    let n = 64;
    let per = periodic_kernel(&k, n);
    let rn = k.rho.powu(n as u32);
    for m in 0..n {
        let want = k.scale * (k.rho.powu(m as u32) + k.rho.powu((n - m) as u32)) / (1.0 - rn);
        assert!((per[m] - want).norm() < 1e-13 * want.norm().max(1e-30));
    }
}

#[test]
fn spectral_route_inverts_assembled_operator() {
    let (_, st, sp) = flat_setup(32, 32, 6.0, 6.0);
    let g = LorentzianMetric::minkowski(1, 6.0).unwrap();
    let (_, p0) = perturbed_pair(&g, &st).unwrap();
    let z = C::new(0.3, 1.0);
    let f = random_field(st.len(), 3);
    let u = static_resolvent_apply(&sp, z, &f, &st, TimeKernel::Discrete).unwrap();
    let pu = p0.apply(&u);
    let r: Vec<C> = pu.iter().zip(&u).map(|(a, b)| a - z * b).collect();
    assert!(rel(&r, &f) < 1e-10);
}

#[test]
fn continuum_kernel_is_second_order() {
    // smooth source, exact discrete solution as reference
    let mut errs = Vec::new();
    for n in [32usize, 64, 128] {
        let (sg, st, sp) = flat_setup(16, n, 2.0 * std::f64::consts::PI, 8.0);
        let ns = sg.len();
        let mut f = vec![C::new(0.0, 0.0); st.len()];
        for it in 0..n {
            let t = st.time(it);
            for is in 0..ns {
                let y = sg.coords(is)[0];
                f[it * ns + is] = C::new((-(t * t) * 2.0).exp() * y.cos(), 0.0);
            }
        }
        let z = C::new(0.0, 1.0);
        let a = static_resolvent_apply(&sp, z, &f, &st, TimeKernel::Continuum).unwrap();
        let b = static_resolvent_apply(&sp, z, &f, &st, TimeKernel::Discrete).unwrap();
        errs.push(rel(&a, &b));
    }
    let order1 = (errs[0] / errs[1]).log2();
    let order2 = (errs[1] / errs[2]).log2();
    assert!(order1 > 1.8 && order2 > 1.8, "{errs:?}");
}

#[test]
fn general_route_reduces_to_modes_at_unit_beta() {
    let (sg, st, sp) = flat_setup(24, 24, 5.0, 5.0);
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[5.0]).unwrap());
    let op = StaticSpatialOperator::new(&bg, &sg).unwrap();
    let z = C::new(-0.4, 0.7);
    let f = random_field(st.len(), 5);
    let a = general_static_resolvent_apply(&op, z, &f, &st, TimeKernel::Discrete).unwrap();
    let b = static_resolvent_apply(&sp, z, &f, &st, TimeKernel::Discrete).unwrap();
    assert!(rel(&a, &b) < 1e-10);
}

#[test]
fn constant_beta_matches_rescaled_static_route() {
    // (β⁻¹D² + λ − z)u = f  ⇔  (D² + βλ − βz)u = βf
    let (sg, st, sp) = flat_setup(24, 24, 5.0, 5.0);
    let beta = 2.0;
    let bg = StaticMetric::new(BetaField::Constant(beta), RiemannianModel::flat_torus(&[5.0]).unwrap());
    let op = StaticSpatialOperator::new(&bg, &sg).unwrap();
    let z = C::new(0.2, 0.5);
    let f = random_field(st.len(), 6);
    let a = general_static_resolvent_apply(&op, z, &f, &st, TimeKernel::Discrete).unwrap();
    let scaled = SpectralDataOwned {
        eigenvalues: sp.eigenvalues.iter().map(|l| l * beta).collect(),
        eigenfunctions: sp.eigenfunctions.clone(),
    };
    let fb: Vec<C> = f.iter().map(|v| v * beta).collect();
    let b = static_resolvent_apply(&scaled, z * beta, &fb, &st, TimeKernel::Discrete).unwrap();
    assert!(rel(&a, &b) < 1e-10, "{}", rel(&a, &b));
}

#[test]
fn variable_beta_route_inverts_assembled_operator() {
    let sg = SpatialGrid::periodic_box(&[24], &[2.0 * std::f64::consts::PI], &[0.0]).unwrap();
    let st = SpacetimeGrid::periodic(24, 5.0, &sg).unwrap();
    let beta = BetaField::Cosine { mean: 1.15, amplitude: 0.65, wavenumber: 1.0, axis: 0 };
    let bg = StaticMetric::new(beta, RiemannianModel::flat_torus(&[2.0 * std::f64::consts::PI]).unwrap());
    let g = LorentzianMetric::new(bg.clone(), None).unwrap();
    let (_, p0) = perturbed_pair(&g, &st).unwrap();
    let op = StaticSpatialOperator::new(&bg, &sg).unwrap();
    let z = C::new(0.1, 0.8);
    let f = random_field(st.len(), 9);
    let u = general_static_resolvent_apply(&op, z, &f, &st, TimeKernel::Discrete).unwrap();
    let pu = p0.apply(&u);
    let r: Vec<C> = pu.iter().zip(&u).map(|(a, b)| a - z * b).collect();
    assert!(rel(&r, &f) < 1e-9, "{}", rel(&r, &f));
}

fn bumped(period: f64, tlen: f64) -> LorentzianMetric {
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[period]).unwrap());
    let _ = tlen;
    LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, period / 2.0], &[1.0, 1.0], 0.3))).unwrap()
}

#[test]
fn direct_route_matches_dense_solve() {
    let sg = SpatialGrid::periodic_box(&[32], &[8.0], &[0.0]).unwrap();
    let st = SpacetimeGrid::periodic(32, 8.0, &sg).unwrap();
    let g = bumped(8.0, 8.0);
    let z = C::new(0.5, 0.6);
    let d = DirectResolvent::new(&g, &st, z).unwrap();
    assert!(d.footprint_size() > 0);
    let f = random_field(st.len(), 11);
    let u = direct_resolvent_apply(&d, &f).unwrap();
    let (p, _) = perturbed_pair(&g, &st).unwrap();
    let n = st.len();
    let dense = p.matrix.to_dense();
    let a = CMat::from_fn(n, n, |i, j| C::new(dense[(i, j)], 0.0) - if i == j { z } else { C::new(0.0, 0.0) });
    let x = a.lu().solve(&CMat::from_column_slice(n, 1, &f)).unwrap();
    assert!(rel(&u, x.as_slice()) < 1e-10);
}

#[test]
fn line_mode_direct_route_has_small_interior_residual() {
    let sg = SpatialGrid::periodic_box(&[32], &[8.0], &[0.0]).unwrap();
    let st = SpacetimeGrid::line(96, 0.25, -12.0, &sg).unwrap();
    let g = bumped(8.0, 24.0);
    let d = DirectResolvent::new(&g, &st, C::new(0.0, 1.0)).unwrap();
    let mut f = vec![C::new(0.0, 0.0); st.len()];
    for it in 0..st.nt() {
        let t = st.time(it);
        if t.abs() <= 0.5 {
            for is in 0..sg.len() {
                f[it * sg.len() + is] = C::new((sg.coords(is)[0]).sin() + 0.3, 0.1);
            }
        }
    }
    let u = direct_resolvent_apply(&d, &f).unwrap();
    assert!(d.residual(&u, &f) < 1e-10);
}

#[test]
fn accretive_root_squares_back_and_matches_modes() {
    let (sg, _, sp) = flat_setup(16, 16, 4.0, 4.0);
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[4.0]).unwrap());
    let op = StaticSpatialOperator::new(&bg, &sg).unwrap();
    let z = C::new(0.7, 0.4);
    let root = accretive_sqrt(&op.l_of_z(z), z, 50, 1).unwrap();
    assert!(root.square_defect < 1e-10);
    assert!(root.margin > 0.0);
    // Φ diag(√(λ_k − z)) Φᵀ in symmetrized coordinates
    let n = sg.len();
    let w = sp.weight().unwrap();
    let v = sp.vectors().unwrap();
    let mut want = CMat::zeros(n, n);
    for (k, lam) in sp.eigenvalues.iter().enumerate() {
        let s = (C::new(*lam, 0.0) - z).sqrt();
        for i in 0..n {
            for j in 0..n {
                want[(i, j)] += s * v[k][i] * w[i].sqrt() * v[k][j] * w[j].sqrt();
            }
        }
    }
    assert!((&root.a - &want).norm() / want.norm() < 1e-10);
}
