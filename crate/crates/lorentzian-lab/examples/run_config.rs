//! Drives the experiment runner from a TOML file, as the binary does.
//!
//! `cargo run --release --example run_config -- configs/selfadjoint.toml selfadjoint-diagnostics`

use lorentzian_lab::runner::{run, ExperimentConfig, RunOptions, Subcommand};

fn main() -> lorentzian_lab::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let cfg = match args.get(1) {
        Some(p) => ExperimentConfig::load(p.as_ref())?,
        None => ExperimentConfig::default(),
    };
    let sub = match args.get(2).map(String::as_str).unwrap_or("resolvent-check") {
        "spectrum" => Subcommand::Spectrum,
        "selfadjoint-diagnostics" => Subcommand::SelfadjointDiagnostics,
        "wavefront" => Subcommand::Wavefront,
        "zeta-residue" => Subcommand::ZetaResidue,
        _ => Subcommand::ResolventCheck,
    };
    let report = run(sub, &cfg, &RunOptions { reproducible: true, ..Default::default() })?;
    for c in &report.checks {
        println!("{:<5} {:<44} {:.3e}", if c.passed { "ok" } else { "FAIL" }, c.name, c.measured);
    }
    println!("config hash {}", report.config_hash);
    std::process::exit(report.exit_code());
}
