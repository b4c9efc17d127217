//! Randomized invariants.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::microlocal::{hamilton_flow, null_covector, symbol, CotangentPoint, FlowOptions};
use lorentzian_lab::resolvent::{direct_resolvent_apply, mode_kernel, weighted_norm, DirectResolvent, TimeKernel};
use lorentzian_lab::runner::ExperimentConfig;
use lorentzian_lab::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::{perturbed_pair, symmetry_residual, SpacetimeGrid};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn bumped(amplitude: f64, beta: f64, center: [f64; 2]) -> LorentzianMetric {
    let bg = StaticMetric::new(BetaField::Constant(beta), RiemannianModel::flat_torus(&[8.0]).unwrap());
    LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&center, &[1.0, 1.5], amplitude))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wave_operator_is_weighted_symmetric(a in -0.3f64..0.3, beta in 0.5f64..2.5, ct in -2.0f64..2.0, cy in -2.0f64..2.0, seed in 0u64..1000) {
        let sg = SpatialGrid::periodic_box(&[24], &[8.0], &[-4.0]).unwrap();
        let st = SpacetimeGrid::periodic(64, 12.0, &sg).unwrap();
        let (p, p0) = perturbed_pair(&bumped(a, beta, [ct, cy]), &st).unwrap();
        prop_assert!(symmetry_residual(&p.matrix, &p.weight, 4, seed) < 1e-12);
        prop_assert!(symmetry_residual(&p0.matrix, &p0.weight, 4, seed) < 1e-12);
    }

    #[test]
    fn discrete_kernel_inverts_the_lattice_operator(re in -5.0f64..400.0, im in 0.01f64..5.0, dt in 0.01f64..0.2) {
        let mu = C::new(re, -im);
        let k = mode_kernel(mu, dt, TimeKernel::Discrete);
        prop_assert!(k.rho.norm() < 1.0);
        let g = |m: i64| k.scale * k.rho.powu(m.unsigned_abs() as u32);
        for m in -2i64..=2 {
            let v = (g(m + 1) - 2.0 * g(m) + g(m - 1)) / (dt * dt) + mu * g(m);
            let want = if m == 0 { 1.0 } else { 0.0 };
            prop_assert!((v - want).norm() < 1e-8 * (1.0 + mu.norm() * dt * dt), "m={} v={}", m, v);
        }
    }

    #[test]
    fn resolvent_norm_bound(a in -0.3f64..0.3, re in -2.0f64..2.0, im in 0.2f64..2.0, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let sg = SpatialGrid::periodic_box(&[24], &[8.0], &[-4.0]).unwrap();
        let st = SpacetimeGrid::periodic(64, 12.0, &sg).unwrap();
        let g = bumped(a, 1.0, [0.0, 0.0]);
        let z = C::new(re, im);
        let d = DirectResolvent::new(&g, &st, z).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<C> = (0..st.len()).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let u = direct_resolvent_apply(&d, &f).unwrap();
        let (p, _) = perturbed_pair(&g, &st).unwrap();
        prop_assert!(im * weighted_norm(&p.weight, &u) <= (1.0 + 1e-9) * weighted_norm(&p.weight, &f));
    }

    #[test]
    fn flow_is_reversible_and_stays_null(y in -4.0f64..4.0, x in -4.0f64..4.0, angle in 0.0f64..std::f64::consts::TAU, sign in prop::bool::ANY) {
        let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[40.0, 40.0]).unwrap());
        let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0; 3], &[1.5; 3], 0.4))).unwrap();
        let pt = [-2.0, y, x];
        let s = if sign { 1.0 } else { -1.0 };
        let start = CotangentPoint::new(&pt, &null_covector(&g, &pt, &[angle.cos(), angle.sin()], s).unwrap());
        let fwd = hamilton_flow(&g, &start, &FlowOptions::new(4.0)).unwrap();
        prop_assert!(symbol(&g, &fwd.last().x, &fwd.last().xi).unwrap().abs() < 1e-8);
        let back = hamilton_flow(&g, fwd.last(), &FlowOptions::new(-4.0)).unwrap();
        for (a, b) in back.last().x.iter().chain(&back.last().xi).zip(start.x.iter().chain(&start.xi)) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn config_round_trips(seed in 0u64..(i64::MAX as u64), nodes in 8usize..512, re in -3.0f64..3.0, im in 0.01f64..3.0, amp in -0.5f64..0.5, radius in 0.1f64..10.0) {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = seed;
        cfg.grid.spatial_nodes = vec![nodes];
        cfg.solver.z = [re, im];
        cfg.metric.radius = radius;
        cfg.experiment.zeta.radius = radius;
        cfg.metric.perturbation = Some(lorentzian_lab::runner::config::PerturbationConfig { center: vec![0.0, 1.0], half_widths: vec![1.0, 2.0], amplitude: amp });
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        prop_assert_eq!(back.to_toml(), text);
        prop_assert_eq!(back.solver.z, cfg.solver.z);
        prop_assert_eq!(back.seed, seed);
    }
}
