//! Residue of the Lorentzian zeta density at the pole against the scalar
//! curvature on ℝ × S³ (radius 1 and 2) and on the flat ℝ × T³.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::spacetime::{LorentzianMetric, StaticMetric};
use lorentzian_lab::zeta::{check_pole_formula, PoleFormulaParams};
use std::f64::consts::PI;

fn main() -> lorentzian_lab::Result<()> {
    let params = PoleFormulaParams::default();
    let x = [0.0, 0.3, 0.1, -0.2];
    let mut sphere = Vec::new();
    for (label, model) in [
        ("S³, r = 1", RiemannianModel::round_sphere(3, 1.0)?),
        ("S³, r = 2", RiemannianModel::round_sphere(3, 2.0)?),
        ("T³ (2π)", RiemannianModel::flat_torus(&[2.0 * PI; 3])?),
    ] {
        let t = std::time::Instant::now();
        let g = LorentzianMetric::new(StaticMetric::ultrastatic(model), None)?;
        let r = check_pole_formula(&g, &x, &params)?;
        println!("{label}: R = {:.6}", r.scalar_curvature);
        println!("  residue {:.6e}  (heat route {:.6e})", r.lhs, r.residues.heat.value);
        println!("  R/(i·6·(4π)²Γ(1)) = {:.6e}, relative error {:?}  [{:.1?}]", r.rhs, r.relative_error, t.elapsed());
        println!("  heat coefficients a₀..a₄ = {:?}", r.heat.a.iter().map(|a| format!("{a:.5}")).collect::<Vec<_>>());
        sphere.push(r.lhs);
    }
    println!("radius-2 / radius-1 ratio {:.5} (expected 0.25)", (sphere[1] / sphere[0]).re);
    Ok(())
}
