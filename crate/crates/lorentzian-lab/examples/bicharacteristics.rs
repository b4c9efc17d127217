//! Null bicharacteristics through a bump in 2+1 dimensions: conservation of
//! the symbol, reversibility and the Σ± label along the curve.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::microlocal::{classify_component, hamilton_flow, null_covector, CotangentPoint, FlowOptions};
use lorentzian_lab::spacetime::{LorentzianMetric, Perturbation, StaticMetric};

fn main() -> lorentzian_lab::Result<()> {
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[40.0, 40.0])?);
    let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], 0.6)))?;
    let x = [-3.0, 2.7, 1.4];
    let xi = null_covector(&g, &x, &[0.8, 0.6], 1.0)?;
    let start = CotangentPoint::new(&x, &xi);
    let fwd = hamilton_flow(&g, &start, &FlowOptions::new(10.0))?;
    let back = hamilton_flow(&g, fwd.last(), &FlowOptions::new(-10.0))?;
    let ret = back.last().x.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("{} samples, |p| drift {:.2e}, return error {:.2e}", fwd.samples.len(), fwd.max_p_drift(), ret);
    for p in fwd.samples.iter().step_by(fwd.samples.len() / 8) {
        let lab = classify_component(&g, p, 1e-7, 20.0)?;
        println!(
            "  x = ({:7.3}, {:7.3}, {:7.3})  ξ = ({:7.4}, {:7.4}, {:7.4})  {:?}{}",
            p.x[0],
            p.x[1],
            p.x[2],
            p.xi[0],
            p.xi[1],
            p.xi[2],
            lab,
            if g.is_perturbed_at(&p.x) { "  in bump" } else { "" }
        );
    }
    Ok(())
}
