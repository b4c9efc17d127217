//! Finite-difference Christoffel symbols and scalar curvature for any metric
//! given as a function of coordinates.
//!
//! Convention: `R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ} Γ^λ_{νσ} − Γ^ρ_{νλ} Γ^λ_{μσ}`,
//! `Ric_{σν} = R^ρ_{σρν}`, `R = g^{σν} Ric_{σν}`. Round spheres have positive
//! curvature, and the product `dt² − h` has `R_g = −R_h`.

use nalgebra::DMatrix;

/// A (pseudo-)Riemannian metric in a coordinate chart.
pub trait MetricField {
    fn dim(&self) -> usize;
    /// Covariant components `g_{jk}(x)`.
    fn metric(&self, x: &[f64]) -> DMatrix<f64>;
    /// Step for the 4th-order difference stencils.
    fn fd_step(&self) -> f64 {
        1e-2
    }
}

fn shifted(x: &[f64], a: usize, s: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[a] += s;
    y
}

/// 4th-order central first derivative of a matrix-valued function.
pub fn d1<F: Fn(&[f64]) -> DMatrix<f64>>(f: &F, x: &[f64], a: usize, h: f64) -> DMatrix<f64> {
    (f(&shifted(x, a, -2.0 * h)) - f(&shifted(x, a, 2.0 * h)) + (f(&shifted(x, a, h)) - f(&shifted(x, a, -h))) * 8.0)
        / (12.0 * h)
}

fn d2<F: Fn(&[f64]) -> DMatrix<f64>>(f: &F, x: &[f64], a: usize, b: usize, h: f64) -> DMatrix<f64> {
    if a == b {
        let c = f(x);
        (f(&shifted(x, a, 2.0 * h)) * -1.0 + f(&shifted(x, a, h)) * 16.0 - c * 30.0 + f(&shifted(x, a, -h)) * 16.0
            - f(&shifted(x, a, -2.0 * h)))
            / (12.0 * h * h)
    } else {
        let g = |y: &[f64]| d1(f, y, b, h);
        d1(&g, x, a, h)
    }
}

/// Local geometric data at a point.
pub struct LocalGeometry {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    /// `gamma[a][b][c] = Γ^a_{bc}`
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

pub fn local_geometry<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> LocalGeometry {
    let n = m.dim();
    let h = m.fd_step();
    let f = |y: &[f64]| m.metric(y);
    let g = f(x);
    let ginv = g.clone().try_inverse().expect("metric must be invertible");
    let dg: Vec<DMatrix<f64>> = (0..n).map(|a| d1(&f, x, a, h)).collect();
    let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
    for a in 0..n {
        for b in a..n {
            let v = d2(&f, x, a, b, h);
            ddg[b][a] = v.clone();
            ddg[a][b] = v;
        }
    }
    let dginv: Vec<DMatrix<f64>> = (0..n).map(|a| -&ginv * &dg[a] * &ginv).collect();
    // lowered Γ_{e,bc} = ½(∂_b g_{ec} + ∂_c g_{eb} − ∂_e g_{bc}) and its derivative
    let low = |e: usize, b: usize, c: usize| 0.5 * (dg[b][(e, c)] + dg[c][(e, b)] - dg[e][(b, c)]);
    let dlow = |d: usize, e: usize, b: usize, c: usize| 0.5 * (ddg[d][b][(e, c)] + ddg[d][c][(e, b)] - ddg[d][e][(b, c)]);
    let mut gamma = vec![vec![vec![0.0; n]; n]; n];
    let mut dgamma = vec![vec![vec![vec![0.0; n]; n]; n]; n]; // [d][a][b][c]
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for e in 0..n {
                    s += ginv[(a, e)] * low(e, b, c);
                }
                gamma[a][b][c] = s;
                for d in 0..n {
                    let mut t = 0.0;
                    for e in 0..n {
                        t += dginv[d][(a, e)] * low(e, b, c) + ginv[(a, e)] * dlow(d, e, b, c);
                    }
                    dgamma[d][a][b][c] = t;
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(n, n);
    for s in 0..n {
        for v in 0..n {
            let mut r = 0.0;
            for p in 0..n {
                r += dgamma[p][p][v][s] - dgamma[v][p][p][s];
                for l in 0..n {
                    r += gamma[p][p][l] * gamma[l][v][s] - gamma[p][v][l] * gamma[l][p][s];
                }
            }
            ricci[(s, v)] = r;
        }
    }
    let scalar = (0..n).flat_map(|s| (0..n).map(move |v| (s, v))).map(|(s, v)| ginv[(s, v)] * ricci[(s, v)]).sum();
    LocalGeometry { g, ginv, gamma, ricci, scalar }
}

pub fn scalar_curvature<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> f64 {
    local_geometry(m, x).scalar
}

/// Inverse metric and its coordinate gradient `∂_a g^{jk}` (4th-order stencils).
pub fn inverse_metric_gradient<M: MetricField + ?Sized>(m: &M, x: &[f64]) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let n = m.dim();
    let h = m.fd_step();
    let inv = |y: &[f64]| m.metric(y).try_inverse().expect("metric must be invertible");
    let ginv = inv(x);
    let grad = (0..n).map(|a| d1(&inv, x, a, h)).collect();
    (ginv, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sphere2;
    impl MetricField for Sphere2 {
        fn dim(&self) -> usize {
            2
        }
        fn metric(&self, x: &[f64]) -> DMatrix<f64> {
            // (θ, φ) chart of the unit 2-sphere
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0].sin().powi(2)])
        }
    }

    #[test]
    fn two_sphere_has_curvature_two() {
        let r = scalar_curvature(&Sphere2, &[1.0, 0.3]);
        assert!((r - 2.0).abs() < 1e-7, "{r}");
    }
}
