//! Experiment configuration (TOML). Lengths and times are in the coordinate
//! units of the metric; `z`, `ε` and eigenvalues in inverse length squared;
//! packet frequencies `κ` in inverse length; angles in radians.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackgroundKind {
    Torus,
    Sphere,
    WarpedCircle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BetaConfig {
    /// `constant` or `cosine`.
    pub kind: String,
    /// Constant lapse squared (dimensionless).
    pub value: f64,
    pub mean: f64,
    pub amplitude: f64,
    /// Angular wavenumber along `axis` (inverse length).
    pub wavenumber: f64,
    pub axis: usize,
}

impl Default for BetaConfig {
    fn default() -> Self {
        BetaConfig { kind: "constant".into(), value: 1.0, mean: 1.15, amplitude: 0.64, wavenumber: 1.0, axis: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// Space-time centre `(t, y…)` (length).
    pub center: Vec<f64>,
    /// Semi-axes (length).
    pub half_widths: Vec<f64>,
    /// Peak of `δg_tt` (dimensionless).
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub background: BackgroundKind,
    /// Spatial dimension.
    pub dim: usize,
    /// Torus periods (length).
    pub periods: Vec<f64>,
    /// Sphere radius (length).
    pub radius: f64,
    /// Relative amplitude of the warped circle metric.
    pub warp_amplitude: f64,
    pub beta: BetaConfig,
    pub perturbation: Option<PerturbationConfig>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            background: BackgroundKind::Torus,
            dim: 1,
            periods: vec![2.0 * std::f64::consts::PI],
            radius: 1.0,
            warp_amplitude: 0.3,
            beta: BetaConfig::default(),
            perturbation: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub spatial_nodes: Vec<usize>,
    pub time_nodes: usize,
    /// `periodic` or `line`.
    pub time_mode: String,
    /// Periodic time box length (time).
    pub time_length: f64,
    /// Line-mode step and first time (time).
    pub dt: f64,
    pub t0: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { spatial_nodes: vec![128], time_nodes: 256, time_mode: "periodic".into(), time_length: 16.0, dt: 0.0625, t0: -8.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Spectral parameter `[Re z, Im z]` (inverse length squared).
    pub z: [f64; 2],
    pub residual_tol: f64,
    /// `both`, `spectral` or `direct`.
    pub route: String,
    /// `discrete` or `continuum`.
    pub kernel: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { z: [0.0, 1.0], residual_tol: 1e-10, route: "both".into(), kernel: "discrete".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Number of eigenpairs; 0 means all.
    pub count: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { count: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventCheckConfig {
    /// Time half-width of the source (time).
    pub source_half_width: f64,
    /// Tolerance for spectral/direct agreement.
    pub agreement_tol: f64,
    pub outgoing_tol: f64,
}

impl Default for ResolventCheckConfig {
    fn default() -> Self {
        ResolventCheckConfig { source_half_width: 0.5, agreement_tol: 1e-8, outgoing_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfAdjointConfig {
    pub trials: usize,
    /// Spectral parameters `[Re z, Im z]`.
    pub z_list: Vec<[f64; 2]>,
    pub symmetry_tol: f64,
    pub identity_tol: f64,
    /// Spatial nodes for the accretivity check (variable `β`).
    pub accretive_nodes: usize,
    pub accretive_samples: usize,
}

impl Default for SelfAdjointConfig {
    fn default() -> Self {
        SelfAdjointConfig {
            trials: 100,
            z_list: vec![[0.0, 0.5], [0.0, 1.0], [1.0, 1.0]],
            symmetry_tol: 1e-12,
            identity_tol: 1e-8,
            accretive_nodes: 256,
            accretive_samples: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefrontConfig {
    /// `[t, y, τ, η]`.
    pub source: [f64; 4],
    /// Optional probe file: one `t y τ η` per line.
    pub probes: Option<PathBuf>,
    /// Packet frequencies κ (inverse length).
    pub scales: Vec<f64>,
    /// `κσ` of every packet.
    pub aspect: f64,
    /// Time separation of allowed/forbidden probes (time).
    pub separation: f64,
    /// Spatial offset of the elliptic probe (length).
    pub elliptic_offset: f64,
    /// Nodes per axis and side length of the square window.
    pub nodes: usize,
    pub length: f64,
    pub tolerance_angle: f64,
}

impl Default for WavefrontConfig {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        WavefrontConfig {
            source: [0.0, 0.0, r, r],
            probes: None,
            scales: vec![8.0, 16.0, 32.0],
            aspect: 6.0,
            separation: 1.0,
            elliptic_offset: 0.75,
            nodes: 512,
            length: 16.0,
            tolerance_angle: std::f64::consts::PI / 16.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZetaConfig {
    /// `sphere` or `torus` (three spatial dimensions).
    pub manifold: String,
    /// Sphere radius (length).
    pub radius: f64,
    /// Torus periods (length).
    pub periods: Vec<f64>,
    pub cutoffs: Vec<usize>,
    /// Regulators ε (inverse length squared), decreasing.
    pub epsilons: Vec<f64>,
    /// Radius of the α circle around the pole.
    pub alpha_window: f64,
    pub alpha_points: usize,
    pub heat_terms: usize,
    /// Evaluation point `(t, y…)`; chart coordinates on spheres.
    pub point: Vec<f64>,
    pub rel_tol: f64,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig {
            manifold: "sphere".into(),
            radius: 1.0,
            periods: vec![2.0 * std::f64::consts::PI; 3],
            cutoffs: vec![60, 80],
            epsilons: vec![0.2, 0.1, 0.05],
            alpha_window: 0.25,
            alpha_points: 16,
            heat_terms: 4,
            point: vec![0.0, 0.3, 0.1, -0.2],
            rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentBlock {
    pub spectrum: SpectrumConfig,
    pub resolvent: ResolventCheckConfig,
    pub selfadjoint: SelfAdjointConfig,
    pub wavefront: WavefrontConfig,
    pub zeta: ZetaConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("lorentzian-out"), plots: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub metric: MetricConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub experiment: ExperimentBlock,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            metric: MetricConfig::default(),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            experiment: ExperimentBlock::default(),
            output: OutputConfig::default(),
        }
    }
}

fn schema(field: &str, expected: &str, actual: impl std::fmt::Debug) -> Error {
    Error::Schema { field: field.into(), expected: expected.into(), actual: format!("{actual:?}") }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() { Ok(()) } else { Err(schema(field, "a positive number", v)) }
}

fn one_of(field: &str, v: &str, opts: &[&str]) -> Result<()> {
    if opts.contains(&v) { Ok(()) } else { Err(schema(field, &format!("one of {opts:?}"), v)) }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Schema {
            field: e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "document".into()),
            expected: "a valid experiment config".into(),
            actual: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(schema("seed", "at most 2^63 − 1 (TOML integer)", self.seed));
        }
        let m = &self.metric;
        if m.dim == 0 || m.dim > 3 {
            return Err(schema("metric.dim", "1, 2 or 3", m.dim));
        }
        positive("metric.radius", m.radius)?;
        if m.background == BackgroundKind::Torus {
            if m.periods.len() != m.dim {
                return Err(schema("metric.periods", &format!("{} entries", m.dim), &m.periods));
            }
            for p in &m.periods {
                positive("metric.periods", *p)?;
            }
        }
        if m.background == BackgroundKind::WarpedCircle && m.dim != 1 {
            return Err(schema("metric.dim", "1 for a warped circle", m.dim));
        }
        if !(m.warp_amplitude.abs() < 1.0) {
            return Err(schema("metric.warp_amplitude", "|a| < 1", m.warp_amplitude));
        }
        one_of("metric.beta.kind", &m.beta.kind, &["constant", "cosine"])?;
        if m.beta.kind == "constant" {
            positive("metric.beta.value", m.beta.value)?;
        } else {
            if !(m.beta.mean - m.beta.amplitude.abs() > 0.0) {
                return Err(schema("metric.beta.amplitude", "|amplitude| < mean (β > 0)", m.beta.amplitude));
            }
            if m.beta.axis >= m.dim {
                return Err(schema("metric.beta.axis", &format!("< {}", m.dim), m.beta.axis));
            }
        }
        if let Some(p) = &m.perturbation {
            if p.center.len() != m.dim + 1 {
                return Err(schema("metric.perturbation.center", &format!("{} entries (t, y…)", m.dim + 1), &p.center));
            }
            if p.half_widths.len() != m.dim + 1 {
                return Err(schema("metric.perturbation.half_widths", &format!("{} entries", m.dim + 1), &p.half_widths));
            }
            for w in &p.half_widths {
                positive("metric.perturbation.half_widths", *w)?;
            }
        }
        let g = &self.grid;
        if g.spatial_nodes.len() != m.dim {
            return Err(schema("grid.spatial_nodes", &format!("{} entries", m.dim), &g.spatial_nodes));
        }
        if g.spatial_nodes.iter().any(|n| *n < 8) {
            return Err(schema("grid.spatial_nodes", "at least 8 per axis", &g.spatial_nodes));
        }
        if g.time_nodes < 8 {
            return Err(schema("grid.time_nodes", "at least 8", g.time_nodes));
        }
        one_of("grid.time_mode", &g.time_mode, &["periodic", "line"])?;
        positive("grid.time_length", g.time_length)?;
        positive("grid.dt", g.dt)?;
        let s = &self.solver;
        if !(s.z[1] > 0.0) {
            return Err(schema("solver.z", "Im z > 0", s.z));
        }
        positive("solver.residual_tol", s.residual_tol)?;
        one_of("solver.route", &s.route, &["both", "spectral", "direct"])?;
        one_of("solver.kernel", &s.kernel, &["discrete", "continuum"])?;
        let sa = &self.experiment.selfadjoint;
        if sa.z_list.iter().any(|z| !(z[1] > 0.0)) {
            return Err(schema("experiment.selfadjoint.z_list", "Im z > 0 for every entry", &sa.z_list));
        }
        let w = &self.experiment.wavefront;
        if w.scales.len() < 2 {
            return Err(schema("experiment.wavefront.scales", "at least two scales", &w.scales));
        }
        for k in &w.scales {
            positive("experiment.wavefront.scales", *k)?;
        }
        if w.aspect < 4.0 {
            return Err(schema("experiment.wavefront.aspect", "κσ ≥ 4", w.aspect));
        }
        if !(w.tolerance_angle > 0.0 && w.tolerance_angle <= std::f64::consts::PI / 8.0) {
            return Err(schema("experiment.wavefront.tolerance_angle", "in (0, π/8]", w.tolerance_angle));
        }
        positive("experiment.wavefront.length", w.length)?;
        if w.nodes < 64 {
            return Err(schema("experiment.wavefront.nodes", "at least 64", w.nodes));
        }
        let z = &self.experiment.zeta;
        one_of("experiment.zeta.manifold", &z.manifold, &["sphere", "torus"])?;
        positive("experiment.zeta.radius", z.radius)?;
        if z.periods.len() != 3 {
            return Err(schema("experiment.zeta.periods", "3 entries", &z.periods));
        }
        for p in &z.periods {
            positive("experiment.zeta.periods", *p)?;
        }
        if z.cutoffs.len() < 2 || z.cutoffs.iter().any(|c| *c < 10) {
            return Err(schema("experiment.zeta.cutoffs", "at least two cutoffs, each ≥ 10", &z.cutoffs));
        }
        if z.epsilons.len() < 3 || z.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(schema("experiment.zeta.epsilons", "at least three positive values", &z.epsilons));
        }
        if !(z.alpha_window > 0.0 && z.alpha_window < 0.5) {
            return Err(schema("experiment.zeta.alpha_window", "in (0, 0.5) so that Re α > 1/2", z.alpha_window));
        }
        if z.point.len() != 4 {
            return Err(schema("experiment.zeta.point", "4 coordinates (t, y1, y2, y3)", &z.point));
        }
        Ok(())
    }
}
