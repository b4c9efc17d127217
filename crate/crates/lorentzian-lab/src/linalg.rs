//! Dense complex helpers: Schur-based square roots and eigenvectors, and a
//! cyclic tridiagonal solver.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Complex Schur form `M = Q T Q*`.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let s = nalgebra::Schur::try_new(m.clone(), 1e-15 * (n as f64), 100 * n.max(10))
        .ok_or_else(|| Error::Solver("complex Schur iteration failed".into()))?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = c0();
        }
    }
    Ok((q, t))
}

/// Principal square root of an upper triangular matrix (Björck–Hammarling).
pub fn sqrt_upper_triangular(t: &CMat) -> Result<CMat> {
    let n = t.nrows();
    let mut r = CMat::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            let d = r[(i, i)] + r[(j, j)];
            if d.norm() == 0.0 {
                return Err(Error::Solver("square root does not exist (r_ii + r_jj = 0)".into()));
            }
            r[(i, j)] = s / d;
        }
    }
    Ok(r)
}

/// Principal square root via Schur; eigenvalues of the result lie in the
/// open right half-plane when `m` has no eigenvalues on the closed negative axis.
pub fn sqrtm(m: &CMat) -> Result<CMat> {
    let (q, t) = schur(m)?;
    let r = sqrt_upper_triangular(&t)?;
    Ok(&q * r * q.adjoint())
}

/// Eigen-decomposition `M = V diag(λ) V⁻¹` read off the Schur form.
pub struct ComplexEigen {
    pub values: Vec<Complex64>,
    pub vectors: CMat,
    pub inverse: CMat,
}

pub fn eigen(m: &CMat) -> Result<ComplexEigen> {
    let n = m.nrows();
    let (q, t) = schur(m)?;
    let scale = t.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = c0();
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < 1e-14 * scale {
                d = Complex64::new(1e-14 * scale, 0.0);
            }
            y[(i, k)] = -s / d;
        }
        let nrm = y.column(k).norm();
        for i in 0..=k {
            y[(i, k)] /= nrm;
        }
    }
    let vectors = &q * y;
    let inverse = vectors
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Solver("eigenvector matrix is singular".into()))?;
    Ok(ComplexEigen {
        values: (0..n).map(|i| t[(i, i)]).collect(),
        vectors,
        inverse,
    })
}

/// Solves a periodic tridiagonal system: `lo[i] x[i-1] + di[i] x[i] + up[i] x[i+1] = b[i]`
/// with indices taken mod n (Sherman–Morrison on the Thomas algorithm).
pub fn solve_cyclic_tridiagonal(
    lo: &[Complex64],
    di: &[Complex64],
    up: &[Complex64],
    b: &[Complex64],
) -> Vec<Complex64> {
    let n = di.len();
    assert!(n >= 3);
    let gamma = -di[0];
    let mut d = di.to_vec();
    d[0] -= gamma;
    d[n - 1] -= up[n - 1] * lo[0] / gamma;
    let x = thomas(lo, &d, up, b);
    let mut u = vec![c0(); n];
    u[0] = gamma;
    u[n - 1] = up[n - 1];
    let zv = thomas(lo, &d, up, &u);
    let fact = (x[0] + lo[0] * x[n - 1] / gamma) / (Complex64::new(1.0, 0.0) + zv[0] + lo[0] * zv[n - 1] / gamma);
    x.iter().zip(&zv).map(|(xi, zi)| xi - fact * zi).collect()
}

fn thomas(lo: &[Complex64], d: &[Complex64], up: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = d.len();
    let mut c = vec![c0(); n];
    let mut x = vec![c0(); n];
    c[0] = up[0] / d[0];
    x[0] = b[0] / d[0];
    for i in 1..n {
        let m = d[i] - lo[i] * c[i - 1];
        c[i] = if i + 1 < n { up[i] / m } else { c0() };
        x[i] = (b[i] - lo[i] * x[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        x[i] = x[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn sqrt_squares_back() {
        let mut m = random(12, 1);
        for i in 0..12 {
            m[(i, i)] += Complex64::new(3.0, -1.0);
        }
        let r = sqrtm(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn eigen_reconstructs() {
        let m = random(10, 2);
        let e = eigen(&m).unwrap();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let back = &e.vectors * d * &e.inverse;
        assert!((back - &m).norm() < 1e-11 * m.norm());
    }

    #[test]
    fn cyclic_tridiagonal_matches_dense() {
        let n = 9;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = || Complex64::new(rng.random::<f64>(), rng.random::<f64>());
        let lo: Vec<_> = (0..n).map(|_| c()).collect();
        let up: Vec<_> = (0..n).map(|_| c()).collect();
        let di: Vec<_> = (0..n).map(|_| c() + 4.0).collect();
        let b: Vec<_> = (0..n).map(|_| c()).collect();
        let x = solve_cyclic_tridiagonal(&lo, &di, &up, &b);
        let mut a = CMat::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = di[i];
            a[(i, (i + n - 1) % n)] += lo[i];
            a[(i, (i + 1) % n)] += up[i];
        }
        let ax = &a * nalgebra::DVector::from_vec(x);
        for i in 0..n {
            assert!((ax[i] - b[i]).norm() < 1e-12);
        }
    }
}
