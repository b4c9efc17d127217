//! The discrete d'Alembertian `□_g` on a space-time grid and the conjugated
//! operator `P = U* □_g U` acting on `L²(M, g₀)`.

use crate::error::{invalid, Error, Result};
use crate::grid::{divergence_form, SpatialGrid};
use crate::spacetime::LorentzianMetric;
use crate::sparse::Csr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeMode {
    /// Time axis wrapped on `[-L_t/2, L_t/2)`.
    Periodic,
    /// A window of the infinite time lattice `t0 + mΔt`, `m ∈ ℤ`.
    Line,
}

/// Space-time grid: axis 0 is time, the remaining axes are the spatial grid.
/// Unknowns are ordered time-major (`index = it · N_s + is`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    pub grid: SpatialGrid,
    pub spatial: SpatialGrid,
    pub mode: TimeMode,
}

impl SpacetimeGrid {
    pub fn periodic(time_nodes: usize, time_length: f64, spatial: &SpatialGrid) -> Result<Self> {
        Self::build(time_nodes, time_length / time_nodes as f64, -0.5 * time_length, spatial, TimeMode::Periodic)
    }

    /// `time_nodes` lattice points starting at `t0` with step `dt`.
    pub fn line(time_nodes: usize, dt: f64, t0: f64, spatial: &SpatialGrid) -> Result<Self> {
        Self::build(time_nodes, dt, t0, spatial, TimeMode::Line)
    }

    fn build(nt: usize, dt: f64, t0: f64, spatial: &SpatialGrid, mode: TimeMode) -> Result<Self> {
        let mut nodes = vec![nt];
        nodes.extend(&spatial.nodes);
        let mut spacing = vec![dt];
        spacing.extend(&spatial.spacing);
        let mut origin = vec![t0];
        origin.extend(&spatial.origin);
        let mut periodic = vec![mode == TimeMode::Periodic];
        periodic.extend(&spatial.periodic);
        Ok(SpacetimeGrid { grid: SpatialGrid::new(nodes, spacing, origin, periodic)?, spatial: spatial.clone(), mode })
    }

    pub fn nt(&self) -> usize {
        self.grid.nodes[0]
    }
    pub fn ns(&self) -> usize {
        self.spatial.len()
    }
    pub fn dt(&self) -> f64 {
        self.grid.spacing[0]
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
    pub fn time(&self, it: usize) -> f64 {
        self.grid.origin[0] + it as f64 * self.dt()
    }
    pub fn time_length(&self) -> f64 {
        self.grid.extent(0)
    }

    /// Sizing rule for periodic boxes: `L_t ≥ 4 (T + horizon)`.
    pub fn check_time_box(&self, support_t: f64, horizon: f64) -> Result<()> {
        if self.mode == TimeMode::Periodic && self.time_length() < 4.0 * (support_t + horizon) {
            return Err(invalid(format!(
                "time box {} shorter than 4(T + horizon) = {}",
                self.time_length(),
                4.0 * (support_t + horizon)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// `□_g` on `L²(M, g)`.
    BoxG,
    /// `P = U* □_g U` on `L²(M, g₀)`.
    ConjugatedP,
}

#[derive(Debug, Clone)]
pub struct DiscreteWaveOperator {
    /// Operator on nodal values.
    pub matrix: Csr,
    /// Symmetric form with `matrix = −diag(weight)⁻¹ form`.
    pub form: Csr,
    pub weight: Vec<f64>,
    /// `|g₀|^{1/2}` · cell volume.
    pub background_weight: Vec<f64>,
    pub flavor: Flavor,
    pub grid: SpacetimeGrid,
}

impl DiscreteWaveOperator {
    pub fn apply(&self, u: &[num_complex::Complex64]) -> Vec<num_complex::Complex64> {
        self.matrix.mul_cvec(u)
    }
}

/// Divergence-form discretization of `|g|^{-1/2} ∂_j |g|^{1/2} g^{jk} ∂_k`.
pub fn assemble_wave_operator(g: &LorentzianMetric, grid: &SpacetimeGrid) -> Result<DiscreteWaveOperator> {
    if grid.grid.dim() != g.n {
        return Err(invalid("grid dimension differs from space-time dimension"));
    }
    if let Some(p) = &g.perturbation {
        for (a, w) in p.half_widths.iter().enumerate() {
            let across = 2.0 * w / grid.grid.spacing[a];
            if across < 8.0 {
                return Err(invalid(format!(
                    "grid too coarse for the perturbation: {across:.1} nodes across axis {a} (minimum 8)"
                )));
            }
        }
    }
    let vol = grid.grid.cell_volume();
    let n = grid.len();
    let mut coeff = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    let mut w0 = Vec::with_capacity(n);
    for node in 0..n {
        let x = grid.grid.coords(node);
        let m = g.metric_at(&x).map_err(|e| match e {
            Error::Signature { coords, .. } => Error::Signature { node: grid.grid.multi_index(node), coords },
            e => e,
        })?;
        let sq = m.abs_det.sqrt();
        coeff.push(m.ginv * sq);
        weight.push(sq * vol);
        w0.push(g.background_metric(&x).determinant().abs().sqrt() * vol);
    }
    let form = divergence_form(&grid.grid, &coeff);
    let inv_w: Vec<f64> = weight.iter().map(|w| -1.0 / w).collect();
    Ok(DiscreteWaveOperator {
        matrix: form.scale_rows(&inv_w),
        form,
        weight,
        background_weight: w0,
        flavor: Flavor::BoxG,
        grid: grid.clone(),
    })
}

/// `P = U⁻¹ □_g U` with `U = (|g|/|g₀|)^{-1/4}`, symmetric for the `|g₀|^{1/2}` weight.
pub fn conjugate_to_reference(op: &DiscreteWaveOperator) -> Result<DiscreteWaveOperator> {
    if op.flavor != Flavor::BoxG {
        return Err(invalid("conjugate_to_reference expects a box_g operator"));
    }
    let u: Vec<f64> = op.weight.iter().zip(&op.background_weight).map(|(w, w0)| (w / w0).powf(-0.5)).collect();
    let form = op.form.scale_rows(&u).scale_cols(&u);
    let inv_w0: Vec<f64> = op.background_weight.iter().map(|w| -1.0 / w).collect();
    Ok(DiscreteWaveOperator {
        matrix: form.scale_rows(&inv_w0),
        form,
        weight: op.background_weight.clone(),
        background_weight: op.background_weight.clone(),
        flavor: Flavor::ConjugatedP,
        grid: op.grid.clone(),
    })
}

/// `P` for `g` together with the unperturbed `P₀` on the same grid.
pub fn perturbed_pair(g: &LorentzianMetric, grid: &SpacetimeGrid) -> Result<(DiscreteWaveOperator, DiscreteWaveOperator)> {
    let p = conjugate_to_reference(&assemble_wave_operator(g, grid)?)?;
    let bg = LorentzianMetric::new(g.background.clone(), None)?;
    let p0 = conjugate_to_reference(&assemble_wave_operator(&bg, grid)?)?;
    Ok((p, p0))
}

/// `max |⟨Au,v⟩_w − ⟨u,Av⟩_w| / (‖u‖_w ‖v‖_w)` over seeded random real pairs.
pub fn symmetry_residual(matrix: &Csr, weight: &[f64], trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = weight.len();
    let dot = |a: &[f64], b: &[f64]| -> f64 { weight.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum() };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let au = matrix.mul_vec(&u);
        let av = matrix.mul_vec(&v);
        let r = (dot(&au, &v) - dot(&u, &av)).abs() / (dot(&u, &u).sqrt() * dot(&v, &v).sqrt());
        worst = worst.max(r);
    }
    worst
}

/// Nodes where the rows of `P − P₀` are nonzero.
pub fn difference_footprint(p: &Csr, p0: &Csr) -> Vec<usize> {
    let v = p.sub(p0);
    (0..v.nrows).filter(|&r| v.indptr[r + 1] > v.indptr[r]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RiemannianModel;
    use crate::spacetime::{BetaField, Perturbation, StaticMetric};

    fn spatial(n: usize, l: f64) -> SpatialGrid {
        SpatialGrid::periodic_box(&[n], &[l], &[-0.5 * l]).unwrap()
    }

    #[test]
    fn minkowski_five_point_stencil() {
        let g = LorentzianMetric::minkowski(1, 4.0).unwrap();
        let grid = SpacetimeGrid::periodic(16, 4.0, &spatial(16, 4.0)).unwrap();
        let op = assemble_wave_operator(&g, &grid).unwrap();
        let h = 0.25;
        let c = 5 * 16 + 7;
        assert!((op.matrix.get(c, c) - 0.0).abs() < 1e-12);
        assert!((op.matrix.get(c, c + 16) - 1.0 / (h * h)).abs() < 1e-12);
        assert!((op.matrix.get(c, c + 1) + 1.0 / (h * h)).abs() < 1e-12);
        assert_eq!(op.matrix.row(c).count(), 5);
    }

    #[test]
    fn constant_beta_two_stencil() {
        let model = RiemannianModel::flat_torus(&[4.0]).unwrap();
        let g = LorentzianMetric::new(StaticMetric::new(BetaField::Constant(2.0), model), None).unwrap();
        let grid = SpacetimeGrid::periodic(16, 4.0, &spatial(16, 4.0)).unwrap();
        let op = assemble_wave_operator(&g, &grid).unwrap();
        let h2 = 0.0625;
        let c = 3 * 16 + 2;
        assert!((op.matrix.get(c, c + 16) - 0.5 / h2).abs() < 1e-14 / h2);
        assert!((op.matrix.get(c, c - 1) + 1.0 / h2).abs() < 1e-14 / h2);
        assert!((op.matrix.get(c, c) - (-1.0 / h2 + 2.0 / h2)).abs() < 1e-14 / h2);
    }

    #[test]
    fn conjugation_is_identity_without_perturbation() {
        let g = LorentzianMetric::minkowski(1, 4.0).unwrap();
        let grid = SpacetimeGrid::periodic(16, 4.0, &spatial(16, 4.0)).unwrap();
        let op = assemble_wave_operator(&g, &grid).unwrap();
        let p = conjugate_to_reference(&op).unwrap();
        assert_eq!(p.matrix, op.matrix);
    }

    #[test]
    fn perturbation_footprint_is_local() {
        let model = RiemannianModel::flat_torus(&[8.0]).unwrap();
        let pert = Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.0], 0.2);
        let g = LorentzianMetric::new(StaticMetric::ultrastatic(model), Some(pert.clone())).unwrap();
        let grid = SpacetimeGrid::periodic(64, 8.0, &spatial(32, 8.0)).unwrap();
        let (p, p0) = perturbed_pair(&g, &grid).unwrap();
        let fp = difference_footprint(&p.matrix, &p0.matrix);
        assert!(!fp.is_empty());
        let h = 0.25;
        for node in fp {
            let x = grid.grid.coords(node);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!(r < 1.0 + 1.5 * h, "{x:?}");
        }
        assert!(symmetry_residual(&p.matrix, &p.weight, 20, 1) < 1e-12);
    }

    #[test]
    fn upwind_fixture_is_detected() {
        let n = 32;
        let trip: Vec<_> = (0..n).flat_map(|i| [(i, i, -1.0), (i, (i + 1) % n, 1.0)]).collect();
        let m = Csr::from_triplets(n, n, &trip);
        assert!(symmetry_residual(&m, &vec![1.0; n], 20, 3) >= 1e-3);
    }
}
