//! Eigenvalues of −Δ_h on a flat and a warped circle, with the second-order
//! convergence of the warped spectrum under grid refinement.

use lorentzian_lab::geometry::{assemble_laplace_beltrami, spectrum, RiemannianModel};
use lorentzian_lab::grid::SpatialGrid;

fn warped(n: usize) -> lorentzian_lab::Result<Vec<f64>> {
    let model = RiemannianModel::warped_circle(n, 0.3)?;
    let grid = SpatialGrid::periodic_box(&[n], &[2.0 * std::f64::consts::PI], &[0.0])?;
    let lb = assemble_laplace_beltrami(&model, &grid)?;
    Ok(spectrum(&lb, 6)?.eigenvalues)
}

fn main() -> lorentzian_lab::Result<()> {
    let n = 128;
    let grid = SpatialGrid::periodic_box(&[n], &[2.0 * std::f64::consts::PI], &[0.0])?;
    let flat = assemble_laplace_beltrami(&RiemannianModel::flat_torus(&[2.0 * std::f64::consts::PI])?, &grid)?;
    let sp = spectrum(&flat, 5)?;
    println!("flat circle, {n} nodes: {:?}", sp.eigenvalues.iter().map(|l| format!("{l:.6}")).collect::<Vec<_>>());

    let (a, b, c) = (warped(64)?, warped(128)?, warped(256)?);
    println!("warped circle (1 + 0.3 cos y)² dy²");
    println!("{:>3} {:>14} {:>14} {:>14} {:>7}", "k", "N=64", "N=128", "N=256", "order");
    for k in 1..6 {
        let order = ((a[k] - b[k]) / (b[k] - c[k])).abs().log2();
        println!("{k:>3} {:>14.10} {:>14.10} {:>14.10} {order:>7.3}", a[k], b[k], c[k]);
    }
    Ok(())
}
