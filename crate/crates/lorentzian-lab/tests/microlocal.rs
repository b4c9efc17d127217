use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::microlocal::*;
use lorentzian_lab::spacetime::{LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::SpacetimeGrid;
use num_complex::Complex64 as C;

fn minkowski() -> LorentzianMetric {
    LorentzianMetric::minkowski(1, 16.0).unwrap()
}

fn bumped_2p1() -> LorentzianMetric {
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[40.0, 40.0]).unwrap());
    LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.6))).unwrap()
}

/// Fixed-step RK4 with centered second-order metric derivatives: an
/// integrator independent of the adaptive one.
fn rk4_reference(g: &LorentzianMetric, start: &CotangentPoint, horizon: f64, steps: usize) -> Vec<f64> {
    let n = g.n;
    let rhs = |y: &[f64]| -> Vec<f64> {
        let x = &y[..n];
        let xi = &y[n..];
        let ginv = |x: &[f64]| g.metric_at(x).unwrap().ginv;
        let gi = ginv(x);
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            out[j] = 2.0 * (0..n).map(|k| gi[(j, k)] * xi[k]).sum::<f64>();
        }
        let h = 1e-5;
        for a in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
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

fn ray_2p1() -> CotangentPoint {
    // enters the bump off-centre so the spatial direction turns
    let g = bumped_2p1();
    let eta = [0.8, 0.6];
    let x = [-3.0, 3.0 * 0.8 + 0.3, 3.0 * 0.6 - 0.4];
    CotangentPoint::new(&x, &null_covector(&g, &x, &eta, 1.0).unwrap())
}

#[test]
fn minkowski_rays_are_straight() {
    let g = minkowski();
    let c = hamilton_flow(&g, &CotangentPoint::new(&[0.0, 0.0], &[1.0, 1.0]), &FlowOptions::new(2.0)).unwrap();
    let end = c.last();
    assert!((end.x[0] - 4.0).abs() < 1e-12 && (end.x[1] + 4.0).abs() < 1e-12);
    assert!(c.max_p_drift() < 1e-14);
    assert_eq!(end.xi, vec![1.0, 1.0]);
}

#[test]
fn null_constraint_is_conserved_through_the_bump() {
    let g = bumped_2p1();
    let c = hamilton_flow(&g, &ray_2p1(), &FlowOptions::new(10.0)).unwrap();
    assert!(c.max_p_drift() <= 1e-9, "drift {}", c.max_p_drift());
    // the ray really crossed the support
    assert!(c.samples.iter().any(|q| g.is_perturbed_at(&q.x)));
}

#[test]
fn flow_is_reversible() {
    let g = bumped_2p1();
    let start = ray_2p1();
    let fwd = hamilton_flow(&g, &start, &FlowOptions::new(10.0)).unwrap();
    let back = hamilton_flow(&g, fwd.last(), &FlowOptions::new(-10.0)).unwrap();
    let end = back.last();
    let err = end.x.iter().zip(&start.x).chain(end.xi.iter().zip(&start.xi)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn rays_leave_the_bump_straight_with_reference_slope() {
    let g = bumped_2p1();
    let start = ray_2p1();
    let c = hamilton_flow(&g, &start, &FlowOptions::new(10.0)).unwrap();
    let end = c.last();
    assert!(!g.is_perturbed_at(&end.x));
    let slope = |xi: &[f64]| -> Vec<f64> { vec![-xi[1] / xi[0], -xi[2] / xi[0]] };
    let reference = rk4_reference(&g, &start, 10.0, 4000);
    let (s_ad, s_ref) = (slope(&end.xi), slope(&reference[3..]));
    for k in 0..2 {
        assert!((s_ad[k] - s_ref[k]).abs() <= 1e-6, "{s_ad:?} vs {s_ref:?}");
    }
    // the direction turned, and is frozen once outside the support
    assert!((s_ad[0] - slope(&start.xi)[0]).abs() > 1e-3);
    let outside: Vec<_> = c.samples.iter().rev().take_while(|q| !g.is_perturbed_at(&q.x)).collect();
    assert!(outside.len() > 3);
    for q in &outside {
        for k in 0..3 {
            assert!((q.xi[k] - end.xi[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn static_classification() {
    let g = minkowski();
    assert_eq!(classify_component(&g, &CotangentPoint::new(&[0.0, 0.0], &[1.0, 1.0]), 1e-9, 10.0).unwrap(), Component::SigmaPlus);
    assert_eq!(classify_component(&g, &CotangentPoint::new(&[0.0, 0.0], &[-2.0, 2.0]), 1e-9, 10.0).unwrap(), Component::SigmaMinus);
    assert_eq!(classify_component(&g, &CotangentPoint::new(&[0.0, 0.0], &[0.0, 1.0]), 1e-9, 10.0).unwrap(), Component::Elliptic);
}

#[test]
fn classification_inside_bump_matches_flowed_image() {
    let g = bumped_2p1();
    let x = [0.1, 0.2, -0.1];
    assert!(g.is_perturbed_at(&x));
    for sign in [1.0, -1.0] {
        let xi = null_covector(&g, &x, &[0.3, 0.9], sign).unwrap();
        let pt = CotangentPoint::new(&x, &xi);
        let c = classify_component(&g, &pt, 1e-9, 10.0).unwrap();
        for h in [6.0, -6.0] {
            let out = hamilton_flow(&g, &pt, &FlowOptions::new(h)).unwrap();
            assert_eq!(classify_component(&g, out.last(), 1e-8, 10.0).unwrap(), c);
        }
        assert_eq!(c.sign(), sign);
    }
}

#[test]
fn feynman_membership_in_minkowski() {
    let g = minkowski();
    let grid = SpatialGrid::periodic_box(&[512], &[16.0], &[-8.0]).unwrap();
    let q = |x1: [f64; 2], x2: [f64; 2], xi: [f64; 2]| FeynmanQuery {
        first: CotangentPoint::new(&x1, &xi),
        second: CotangentPoint::new(&x2, &xi),
        tolerance_angle: std::f64::consts::PI / 16.0,
        horizon: 5.0,
    };
    // diagonal
    assert!(feynman_contains(&q([0.3, 0.4], [0.3, 0.4], [0.0, 1.0]), &g, &grid).unwrap().contains);
    // right-moving null ray dy/dt = 1 carries ξ = (1, −1) on Σ⁺
    let v = feynman_contains(&q([0.0, 0.0], [1.0, 1.0], [1.0, -1.0]), &g, &grid).unwrap();
    assert!(v.contains && v.witness.is_some(), "{}", v.reason);
    assert!(!feynman_contains(&q([1.0, 1.0], [0.0, 0.0], [1.0, -1.0]), &g, &grid).unwrap().contains);
    // mirrored on Σ⁻: the future is allowed
    assert!(feynman_contains(&q([1.0, 1.0], [0.0, 0.0], [-1.0, 1.0]), &g, &grid).unwrap().contains);
    // off the ray
    assert!(!feynman_contains(&q([0.0, 0.0], [1.0, 1.5], [1.0, -1.0]), &g, &grid).unwrap().contains);
}

fn small_grid() -> SpacetimeGrid {
    let sg = SpatialGrid::periodic_box(&[256], &[16.0], &[-8.0]).unwrap();
    SpacetimeGrid::line(256, 1.0 / 16.0, -8.0, &sg).unwrap()
}

#[test]
fn smooth_fields_have_rapidly_decaying_energy() {
    let grid = small_grid();
    let w = vec![1.0; grid.len()];
    let u: Vec<C> = (0..grid.len())
        .map(|i| {
            let x = grid.grid.coords(i);
            C::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        })
        .collect();
    for dir in [[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]] {
        let s = microlocal_energy(&u, &w, &grid, &[0.0, 0.0], &dir, &[8.0, 16.0, 32.0], 6.0).unwrap();
        assert!(s.exponent <= -4.0, "{:?}", s);
    }
}

#[test]
fn spikes_are_singular_in_every_direction() {
    let grid = small_grid();
    let w = vec![1.0; grid.len()];
    let mut u = vec![C::new(0.0, 0.0); grid.len()];
    u[grid.grid.flat_index(&[128, 128])] = C::new(1.0, 0.0);
    let x0 = grid.grid.coords(grid.grid.flat_index(&[128, 128]));
    for dir in [[1.0, 0.0], [0.6, 0.8]] {
        let s = microlocal_energy(&u, &w, &grid, &x0, &dir, &[8.0, 16.0, 32.0], 6.0).unwrap();
        assert!(s.exponent >= -1.0, "{:?}", s);
    }
    // far away probe sees nothing
    let far = packet_energy(&u, &w, &grid, &WavePacket::with_aspect(&[4.0, 5.0], &[1.0, 0.0], 32.0, 6.0).unwrap()).unwrap();
    assert!(far < 1e-200);
}

#[test]
fn packet_invariants_are_enforced() {
    let grid = small_grid();
    assert!(WavePacket::new(&[0.0, 0.0], &[1.0, 0.0], 0.1, 10.0).is_err());
    let p = WavePacket::with_aspect(&[7.5, 0.0], &[1.0, 0.0], 8.0, 6.0).unwrap();
    assert!(p.sample(&grid).is_err());
    let thin = WavePacket::new(&[0.0, 0.0], &[1.0, 0.0], 0.05, 100.0).unwrap();
    assert!(thin.sample(&grid).is_err());
}
