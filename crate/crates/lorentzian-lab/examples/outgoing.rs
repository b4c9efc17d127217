//! The outgoing identities `(D_t ± A(z))u = 0` beyond the supports, for
//! β = 1 and β = 2, on a window of the time lattice.

use lorentzian_lab::geometry::RiemannianModel;
use lorentzian_lab::grid::SpatialGrid;
use lorentzian_lab::resolvent::{direct_resolvent_apply, outgoing_residual, Background, DirectResolvent, Side, C64};
use lorentzian_lab::spacetime::{BetaField, LorentzianMetric, Perturbation, StaticMetric};
use lorentzian_lab::waveop::SpacetimeGrid;

fn main() -> lorentzian_lab::Result<()> {
    let sg = SpatialGrid::periodic_box(&[64], &[8.0], &[-4.0])?;
    let st = SpacetimeGrid::line(256, 0.0625, -8.0, &sg)?;
    let f: Vec<C64> = (0..st.len())
        .map(|i| {
            let (t, y) = (st.time(i / 64) / 0.5, sg.coords(i % 64)[0]);
            let b = if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
            C64::new(b * (0.4 + y.cos()), 0.2 * b)
        })
        .collect();
    for beta in [1.0, 2.0] {
        let bg = StaticMetric::new(BetaField::Constant(beta), RiemannianModel::flat_torus(&[8.0])?);
        let g = LorentzianMetric::new(bg, Some(Perturbation::tt_bump(&[0.0, 0.0], &[1.0, 1.5], 0.3)))?;
        let d = DirectResolvent::new(&g, &st, C64::new(0.0, 1.0))?;
        let u = direct_resolvent_apply(&d, &f)?;
        let Background::Modal(modal) = &d.background else { unreachable!("line windows use the modal background") };
        let plus = outgoing_residual(&u, modal, 1.0)?;
        let minus = outgoing_residual(&u, modal, -1.0)?;
        let t_out = 1.0 + 2.0 * st.dt();
        println!("β = {beta}");
        println!("  (D_t + A)u, t > {t_out}:  max {:.2e}", plus.max_beyond(t_out, Side::Future));
        println!("  (D_t − A)u, t < −{t_out}: max {:.2e}", minus.max_beyond(t_out, Side::Past));
        println!("  wrong sign:               min {:.2e} / {:.2e}", minus.min_beyond(t_out, Side::Future), plus.min_beyond(t_out, Side::Past));
    }
    Ok(())
}
