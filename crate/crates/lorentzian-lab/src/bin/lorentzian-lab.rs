//! Command-line front end for the experiment runner.

use clap::{Args, Parser, Subcommand as ClapSub};
use lorentzian_lab::runner::{self, ExperimentConfig, RunOptions, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lorentzian-lab", version, about = "Wave resolvents, Feynman wavefront probes and spectral zeta residues on static spacetimes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Experiment config (TOML); defaults are used for missing keys.
    #[arg(long, visible_alias = "metric", global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    report: Option<PathBuf>,
    /// Eigen-data cache directory (else $LORENTZIAN_LAB_CACHE, else <report>/cache).
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// One worker thread and fixed reduction order.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Write the assembled operator in Matrix Market format.
    #[arg(long, global = true, value_name = "FILE")]
    dump_operator: Option<PathBuf>,
    #[arg(long, global = true)]
    no_plots: bool,
    /// Print the effective config and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(ClapSub)]
enum Cmd {
    /// Eigen-data of −Δ_h with orthonormality and residual checks.
    Spectrum {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Spectral vs direct resolvent, norm bound and outgoing identities.
    ResolventCheck {
        #[arg(long, value_parser = complex)]
        z: Option<[f64; 2]>,
        #[arg(long, value_parser = ["spectral", "direct", "both"])]
        route: Option<String>,
        #[arg(long, value_parser = ["discrete", "continuum"])]
        kernel: Option<String>,
    },
    /// Norm bounds, weighted symmetry, resolvent identity and accretivity.
    SelfadjointDiagnostics {
        #[arg(long, value_parser = complex)]
        z: Option<[f64; 2]>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Feynman wavefront contrast from packet probes.
    Wavefront {
        #[arg(long, value_parser = complex)]
        z: Option<[f64; 2]>,
        /// Source cotangent point `t,y,τ,η`.
        #[arg(long, value_parser = source)]
        source: Option<[f64; 4]>,
        /// Extra probes, one `t y τ η` per line.
        #[arg(long, value_name = "FILE")]
        probes: Option<PathBuf>,
        /// Packet frequencies, e.g. `8,16,32`.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Residue of the Lorentzian zeta density against the scalar curvature.
    ZetaResidue {
        #[arg(long, value_parser = ["sphere", "torus"])]
        manifold: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        periods: Option<Vec<f64>>,
        /// Eigenvalue cutoffs, e.g. `60,80`.
        #[arg(long, value_delimiter = ',')]
        cutoff: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Radius of the α circle around the pole.
        #[arg(long)]
        alpha_window: Option<f64>,
    },
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn complex(s: &str) -> Result<[f64; 2], String> {
    floats::<2>(s)
}

fn source(s: &str) -> Result<[f64; 4], String> {
    floats::<4>(s)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => match ExperimentConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.no_plots {
        cfg.output.plots = false;
    }
    let sub = match cli.cmd {
        Cmd::Spectrum { count } => {
            if let Some(c) = count {
                cfg.experiment.spectrum.count = c;
            }
            Subcommand::Spectrum
        }
        Cmd::ResolventCheck { z, route, kernel } => {
            if let Some(z) = z {
                cfg.solver.z = z;
            }
            if let Some(r) = route {
                cfg.solver.route = r;
            }
            if let Some(k) = kernel {
                cfg.solver.kernel = k;
            }
            Subcommand::ResolventCheck
        }
        Cmd::SelfadjointDiagnostics { z, trials } => {
            if let Some(z) = z {
                cfg.solver.z = z;
            }
            if let Some(t) = trials {
                cfg.experiment.selfadjoint.trials = t;
            }
            Subcommand::SelfadjointDiagnostics
        }
        Cmd::Wavefront { z, source, probes, scales } => {
            let w = &mut cfg.experiment.wavefront;
            if let Some(z) = z {
                cfg.solver.z = z;
            }
            if let Some(s) = source {
                w.source = s;
            }
            if probes.is_some() {
                w.probes = probes;
            }
            if let Some(s) = scales {
                w.scales = s;
            }
            Subcommand::Wavefront
        }
        Cmd::ZetaResidue { manifold, radius, periods, cutoff, epsilons, alpha_window } => {
            let z = &mut cfg.experiment.zeta;
            if let Some(m) = manifold {
                z.manifold = m;
            }
            if let Some(r) = radius {
                z.radius = r;
            }
            if let Some(p) = periods {
                z.periods = p;
            }
            if let Some(c) = cutoff {
                z.cutoffs = c;
            }
            if let Some(e) = epsilons {
                z.epsilons = e;
            }
            if let Some(a) = alpha_window {
                z.alpha_window = a;
            }
            Subcommand::ZetaResidue
        }
    };
    if g.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let opts = RunOptions { report_dir: g.report, cache_dir: g.cache_dir, threads: g.threads, reproducible: g.reproducible, dump_operator: g.dump_operator };
    match runner::run(sub, &cfg, &opts) {
        Ok(report) => {
            for c in &report.checks {
                println!("{} {:<44} measured {:<12.4e} {}{}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.measured, c.detail, if c.gated { "" } else { "  (logged)" });
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            println!("report written to {}", report.artifacts.iter().find(|p| p.ends_with("report.json")).map(|p| p.display().to_string()).unwrap_or_default());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
