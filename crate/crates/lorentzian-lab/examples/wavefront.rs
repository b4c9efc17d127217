//! Feynman wavefront contrast on a 512² window around a `g_tt` bump.
//!
//! `cargo run --release --example wavefront [-- nodes length]`

use lorentzian_lab::microlocal::{wavefront_experiment, WavefrontSetup};

fn main() -> lorentzian_lab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let setup = if args.len() == 3 {
        WavefrontSetup::sized(args[1].parse().unwrap(), args[2].parse().unwrap())?
    } else {
        WavefrontSetup::standard()?
    };
    let t0 = std::time::Instant::now();
    let (probes, allowed, forbidden) = setup.standard_probes()?;
    let report = wavefront_experiment(&setup, &probes, vec![allowed, forbidden])?;
    println!("{:<10} {:>8} {:>22} {:>9}  energies at κ = {:?}", "probe", "in Λ", "position", "exponent", report.kappas);
    for r in &report.probes {
        let x = &r.probe.point.x;
        println!(
            "{:<10} {:>8} {:>22} {:>9.2}  {:?}",
            r.probe.label,
            r.in_lambda,
            format!("({:.3}, {:.3})", x[0], x[1]),
            r.exponent,
            r.energies.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>()
        );
    }
    println!("contrast allowed/forbidden: {:?}", report.contrast.iter().map(|c| format!("{c:.3e}")).collect::<Vec<_>>());
    println!("non-decreasing: {}", report.contrast_monotone);
    println!("solve residuals: {:?}", report.source_residuals);
    println!("elapsed {:.1?}", t0.elapsed());
    Ok(())
}
