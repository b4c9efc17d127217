//! Consequences of self-adjointness for a perturbed operator: weighted
//! symmetry, the bound ‖(P − z)⁻¹‖ ≤ 1/Im z and the resolvent identity.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::resolvent::{direct_resolvent_apply, weighted_norm, DirectResolvent, C64};
use lorentzian_lab::spacetime::{LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::{perturbed_pair, symmetry_residual, SpacetimeGrid};
use rand::{Rng, SeedableRng};

fn main() -> lorentzian_lab::Result<()> {
    let sg = SpatialGrid::periodic_box(&[64], &[8.0], &[-4.0])?;
    let st = SpacetimeGrid::periodic(128, 16.0, &sg)?;
    let bg = StaticMetric::ultrastatic(RiemannianModel::flat_torus(&[8.0])?);
    let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.5], 0.3)))?;
    let (p, _) = perturbed_pair(&g, &st)?;
    println!("weighted symmetry residual {:.2e}", symmetry_residual(&p.matrix, &p.weight, 20, 1));

    let zs = [C64::new(0.0, 0.5), C64::new(0.0, 1.0), C64::new(1.0, 1.0)];
    let solvers: Vec<_> = zs.iter().map(|&z| DirectResolvent::new(&g, &st, z)).collect::<Result<_, _>>()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut field = || -> Vec<C64> { (0..st.len()).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect() };
    for (z, d) in zs.iter().zip(&solvers) {
        let worst = (0..100)
            .map(|_| {
                let f = field();
                let u = direct_resolvent_apply(d, &f).unwrap();
                z.im * weighted_norm(&p.weight, &u) / weighted_norm(&p.weight, &f)
            })
            .fold(0.0, f64::max);
        println!("z = {z}: max Im z ‖R(z)f‖/‖f‖ over 100 f = {worst:.6}");
    }
    let f = field();
    let a = solvers[0].solve_unchecked(&f)?;
    let b = solvers[2].solve_unchecked(&f)?;
    let ab = solvers[0].solve_unchecked(&b)?;
    let lhs: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let err: Vec<C64> = lhs.iter().zip(&ab).map(|(l, r)| l - (zs[0] - zs[2]) * r).collect();
    println!("resolvent identity defect {:.2e}", weighted_norm(&p.weight, &err) / weighted_norm(&p.weight, &lhs));
    Ok(())
}
