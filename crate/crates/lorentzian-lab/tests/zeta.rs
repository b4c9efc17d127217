use lorentzian_lab::geometry::{analytic_spectrum, RiemannianModel};
use lorentzian_lab::spacetime::{LorentzianMetric, StaticMetric};
use lorentzian_lab::zeta::*;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn sphere3(r: f64) -> RiemannianModel {
    RiemannianModel::round_sphere(3, r).unwrap()
}

fn torus3() -> RiemannianModel {
    RiemannianModel::flat_torus(&[2.0 * PI; 3]).unwrap()
}

#[test]
fn closed_form_matches_quadrature() {
    for (lam, eps, a) in [(1.0, 0.1, C::new(2.0, 0.0)), (7.5, 0.2, C::new(1.1, 0.3)), (0.0, 0.1, C::new(0.8, -0.2))] {
        let q = tau_integral_quadrature(lam, eps, a, 1e-12).unwrap();
        let cf = tau_integral(lam, eps, a).unwrap();
        assert!((q - cf).norm() <= 1e-9 * q.norm(), "{lam} {eps} {a}: {q} vs {cf}");
    }
}

#[test]
fn tau_integral_scaling_law() {
    let a = C::new(1.7, 0.2);
    let s: f64 = 2.0;
    let lhs = tau_integral(4.0 * 3.0, 4.0 * 0.1, a).unwrap();
    let rhs = tau_integral(3.0, 0.1, a).unwrap() * C::new(s, 0.0).powc(C::new(1.0, 0.0) - 2.0 * a);
    assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
}

#[test]
fn tau_integral_rejects_bad_arguments() {
    assert!(tau_integral(1.0, 0.1, C::new(0.5, 0.0)).is_err());
    assert!(tau_integral(1.0, 0.0, C::new(2.0, 0.0)).is_err());
}

#[test]
fn massless_tau_integral_is_continuous_in_eps() {
    let a = C::new(0.9, 0.0);
    let v1 = tau_integral_quadrature(0.0, 0.1, a, 1e-11).unwrap();
    let v2 = tau_integral_quadrature(0.0, 0.101, a, 1e-11).unwrap();
    assert!(v1.norm().is_finite() && (v1 - v2).norm() < 0.05 * v1.norm());
}

#[test]
fn diagonal_converges_in_cutoff_on_torus() {
    let a = C::new(3.0, 0.0);
    let v40 = lorentzian_power_diagonal(&analytic_spectrum(&torus3(), 40).unwrap(), 3, &[0.0; 3], a, 0.1).unwrap();
    let v80 = lorentzian_power_diagonal(&analytic_spectrum(&torus3(), 80).unwrap(), 3, &[0.0; 3], a, 0.1).unwrap();
    assert!((v40.value - v80.value).norm() <= 0.005 * v80.value.norm());
    // monotone in ε at real α
    let sp = analytic_spectrum(&torus3(), 40).unwrap();
    let mags: Vec<f64> =
        [0.2, 0.1, 0.05].iter().map(|&e| lorentzian_power_diagonal(&sp, 3, &[0.0; 3], a, e).unwrap().value.norm()).collect();
    assert!(mags.windows(2).all(|w| w[1] >= w[0]) || mags.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn diagonal_refuses_divergent_sums() {
    let sp = analytic_spectrum(&torus3(), 20).unwrap();
    assert!(lorentzian_power_diagonal(&sp, 3, &[0.0; 3], C::new(1.5, 0.0), 0.1).is_err());
}

#[test]
fn continuation_agrees_with_convergent_sum() {
    // above n/2 both the plain sum and the continuation are available
    let sp = analytic_spectrum(&sphere3(1.0), 80).unwrap();
    let a = C::new(2.6, 0.3);
    let direct = lorentzian_power_diagonal(&sp, 3, &[0.0; 3], a, 0.1).unwrap();
    let cont = continued_diagonal(&sp, 3, a, 0.1, &ContinuationParams::default()).unwrap();
    assert!((direct.value - cont).norm() <= 2.0 * direct.tail + 1e-6 * direct.value.norm());
}

#[test]
fn heat_coefficients_of_catalog_spaces() {
    let s = local_heat_coefficients(&analytic_spectrum(&sphere3(1.0), 80).unwrap(), 3, &[0.0; 3], 4).unwrap();
    assert!((s.a[0] - 1.0).abs() <= 0.02 && (s.a[1] - 1.0).abs() <= 0.01, "{:?}", s.a);
    let t = local_heat_coefficients(&analytic_spectrum(&torus3(), 80).unwrap(), 3, &[0.0; 3], 4).unwrap();
    assert!((t.a[0] - 1.0).abs() <= 1e-3 && t.a[1].abs() <= 1e-3, "{:?}", t.a);
}

#[test]
fn richardson_is_exact_on_linear_data() {
    let e = [0.2, 0.1, 0.05];
    let v: Vec<C> = e.iter().map(|x| C::new(1.0 + 2.0 * x, -3.0 * x)).collect();
    assert!((richardson(&e, &v, 2) - C::new(1.0, 0.0)).norm() < 1e-14);
    assert!((richardson(&e, &v, 3) - C::new(1.0, 0.0)).norm() < 1e-14);
}

fn ultrastatic(model: RiemannianModel) -> LorentzianMetric {
    LorentzianMetric::new(StaticMetric::ultrastatic(model), None).unwrap()
}

#[test]
fn residue_formula_on_sphere_and_torus() {
    let p = PoleFormulaParams::default();
    let x = [0.3, 0.1, -0.2, 0.4];
    let s = check_pole_formula(&ultrastatic(sphere3(1.0)), &x, &p).unwrap();
    assert!((s.scalar_curvature + 6.0).abs() < 1e-6);
    assert!(s.relative_error.unwrap() <= 0.05, "{:?}", s.relative_error);
    assert!(s.residues.agree);
    let r2 = (s.residues.pole_fit.richardson_two - s.residues.pole_fit.richardson_three).norm() / s.lhs.norm();
    assert!(r2 <= 0.01);
    let t = check_pole_formula(&ultrastatic(torus3()), &x, &p).unwrap();
    assert!(t.lhs.norm() <= 1e-3 * s.lhs.norm());
    assert!(t.residues.agree);
}

#[test]
fn residue_scales_with_curvature() {
    let p = PoleFormulaParams::default();
    let x = [0.0, 0.2, 0.1, 0.3];
    let one = check_pole_formula(&ultrastatic(sphere3(1.0)), &x, &p).unwrap();
    let two = check_pole_formula(&ultrastatic(sphere3(2.0)), &x, &p).unwrap();
    let ratio = (two.lhs / one.lhs).norm();
    assert!((ratio - 0.25).abs() <= 0.05 * 0.25, "{ratio}");
}
