//! Config-driven experiment runner behind the `lorentzian-lab` binary.
//!
//! [`run`] validates a config, executes one subcommand, and always writes a
//! report directory (`report.json`, `checks.csv`, subcommand tables, optional
//! SVG plots). [`RunReport::exit_code`] is nonzero iff a gated check failed.

pub mod cache;
pub mod config;
mod experiments;
pub mod plot;
pub mod report;

pub use cache::{Cache, CacheOutcome, CACHE_ENV};
pub use config::ExperimentConfig;
pub use experiments::read_probe_file;
pub use report::{Check, RunReport};

use crate::error::{Error, Result};
use crate::geometry::RiemannianModel;
use crate::grid::SpatialGrid;
use crate::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use crate::waveop::SpacetimeGrid;
use config::BackgroundKind;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Spectrum,
    ResolventCheck,
    SelfadjointDiagnostics,
    Wavefront,
    ZetaResidue,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::ResolventCheck => "resolvent-check",
            Subcommand::SelfadjointDiagnostics => "selfadjoint-diagnostics",
            Subcommand::Wavefront => "wavefront",
            Subcommand::ZetaResidue => "zeta-residue",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Report directory; defaults to `output.dir` of the config.
    pub report_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Single worker thread, fixed reduction order.
    pub reproducible: bool,
    /// Matrix Market dump of the assembled operator.
    pub dump_operator: Option<PathBuf>,
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub opts: &'a RunOptions,
    pub report: RunReport,
    pub dir: PathBuf,
    pub cache_dir: PathBuf,
}

impl Ctx<'_> {
    pub fn cache(&self) -> Result<Cache> {
        Cache::open(&self.cache_dir)
    }

    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self);
        self.report.time(stage, t.elapsed().as_secs_f64());
        out
    }

    pub fn plot_path(&mut self, name: &str) -> Option<PathBuf> {
        if !self.cfg.output.plots {
            return None;
        }
        let p = self.dir.join(name);
        self.report.artifacts.push(p.clone());
        Some(p)
    }
}

/// Runs `sub` and writes its report. Schema errors are returned before any
/// work; failures during the run are recorded in the report instead.
pub fn run(sub: Subcommand, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let dir = opts.report_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let cache_dir = Cache::resolve_dir(opts.cache_dir.as_deref(), &dir.join("cache"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::from(e).context(format!("creating report directory {}", dir.display())))?;
    let report = RunReport::new(sub.name(), cfg.to_toml(), cfg.seed, opts.reproducible);
    let mut ctx = Ctx { cfg, opts, report, dir: dir.clone(), cache_dir };
    let threads = if opts.reproducible { Some(1) } else { opts.threads };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Solver(format!("thread pool: {e}")))?;
    let t = Instant::now();
    let outcome = pool.install(|| match sub {
        Subcommand::Spectrum => experiments::spectrum(&mut ctx),
        Subcommand::ResolventCheck => experiments::resolvent_check(&mut ctx),
        Subcommand::SelfadjointDiagnostics => experiments::selfadjoint(&mut ctx),
        Subcommand::Wavefront => experiments::wavefront(&mut ctx),
        Subcommand::ZetaResidue => experiments::zeta_residue(&mut ctx),
    });
    ctx.report.time("total", t.elapsed().as_secs_f64());
    if let Err(e) = outcome {
        log::error!("{} failed: {e}", sub.name());
        ctx.report.error = Some(e.to_string());
    }
    let mut report = ctx.report;
    report.write(&dir)?;
    Ok(report)
}

/// Spatial model and, for grid-based backgrounds, its periodic grid. Torus
/// axes cover `[−L/2, L/2)`; the warped circle covers `[0, 2π)`.
pub fn spatial_model(cfg: &ExperimentConfig) -> Result<(RiemannianModel, Option<SpatialGrid>)> {
    let m = &cfg.metric;
    match m.background {
        BackgroundKind::Torus => {
            let origin: Vec<f64> = m.periods.iter().map(|p| -0.5 * p).collect();
            let grid = SpatialGrid::periodic_box(&cfg.grid.spatial_nodes, &m.periods, &origin)?;
            Ok((RiemannianModel::flat_torus(&m.periods)?, Some(grid)))
        }
        BackgroundKind::Sphere => Ok((RiemannianModel::round_sphere(m.dim, m.radius)?, None)),
        BackgroundKind::WarpedCircle => {
            let model = RiemannianModel::warped_circle(cfg.grid.spatial_nodes[0], m.warp_amplitude)?;
            let grid = match &model.kind {
                crate::geometry::ModelKind::GridMetric { grid, .. } => grid.clone(),
                _ => unreachable!(),
            };
            Ok((model, Some(grid)))
        }
    }
}

pub fn beta_field(cfg: &ExperimentConfig) -> BetaField {
    let b = &cfg.metric.beta;
    if b.kind == "constant" {
        BetaField::Constant(b.value)
    } else {
        BetaField::Cosine { mean: b.mean, amplitude: b.amplitude, wavenumber: b.wavenumber, axis: b.axis }
    }
}

/// The configured metric `g` (with its perturbation, if any).
pub fn build_metric(cfg: &ExperimentConfig) -> Result<LorentzianMetric> {
    let (model, _) = spatial_model(cfg)?;
    let bg = StaticMetric::new(beta_field(cfg), model);
    let pert = cfg.metric.perturbation.as_ref().map(|p| Perturbation::tt_bump(&p.center, &p.half_widths, p.amplitude));
    LorentzianMetric::new(bg, pert)
}

pub fn build_grid(cfg: &ExperimentConfig) -> Result<SpacetimeGrid> {
    let (_, sg) = spatial_model(cfg)?;
    let sg = sg.ok_or_else(|| Error::Unsupported("this subcommand needs a grid background (torus or warped circle)".into()))?;
    let g = &cfg.grid;
    if g.time_mode == "periodic" {
        SpacetimeGrid::periodic(g.time_nodes, g.time_length, &sg)
    } else {
        SpacetimeGrid::line(g.time_nodes, g.dt, g.t0, &sg)
    }
}
