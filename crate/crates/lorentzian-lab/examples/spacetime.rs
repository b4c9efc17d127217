//! Hypothesis scan, causal relations and curvature for a bumped static metric.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::spacetime::{causal_relation, lorentzian_scalar_curvature, validate_hypothesis, BetaField, LorentzianMetric, Perturbation, StaticMetric};

fn main() -> lorentzian_lab::Result<()> {
    let beta = BetaField::Cosine { mean: 1.15, amplitude: 0.64, wavenumber: 1.0, axis: 0 };
    let bg = StaticMetric::new(beta, RiemannianModel::flat_torus(&[2.0 * std::f64::consts::PI])?);
    let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 1.0], &[0.8, 0.8], 0.4)))?;
    let st = SpatialGrid::new(vec![64, 64], vec![0.125, 2.0 * std::f64::consts::PI / 64.0], vec![-4.0, 0.0], vec![false, true])?;
    let rep = validate_hypothesis(&g, &st);
    println!("support nodes {}, time range {:?}", rep.support_nodes.len(), rep.support_time_range);
    println!("β ∈ [{:.3}, {:.3}], C = {:.3}, signature margin {:.3}", rep.beta_min, rep.beta_max, rep.beta_constant, rep.signature_margin);
    println!("violations {:?}", rep.violations);
    let space = SpatialGrid::periodic_box(&[256], &[2.0 * std::f64::consts::PI], &[0.0])?;
    for (a, b) in [([0.0, 0.0], [3.0, 1.0]), ([3.0, 1.0], [0.0, 0.0]), ([0.0, 0.0], [0.5, 2.5])] {
        println!("{a:?} vs {b:?}: {:?}", causal_relation(&a, &b, &g, &space)?);
    }
    println!("R_g at (0, 1): {:.5}", lorentzian_scalar_curvature(&g, &[0.0, 1.0])?);
    Ok(())
}
