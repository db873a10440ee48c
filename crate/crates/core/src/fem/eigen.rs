//! Lanczos iteration for the generalized pencil `(K, M)`.
//!
//! The operator `M⁻¹K` is self-adjoint in the M-inner product, so Lanczos
//! with M-orthonormal vectors reduces it to a symmetric tridiagonal matrix.
//! Full reorthogonalization keeps the basis orthogonal; plain power iteration
//! converges too slowly on the clustered top of the spectrum.

use super::{dot, FemSystem};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(super) const DEFAULT_MAX_ITER: usize = 600;

fn ritz_values(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] < v[b] { i } else { b })
}

pub(super) fn lanczos_extremes(sys: &FemSystem, max_iter: usize, tol: f64) -> Result<(f64, f64)> {
    let n = sys.dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = sys.mass_inner(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let limit = max_iter.min(n);

    for j in 0..limit {
        let mq = sys.mul_mass(&q);
        let kq = sys.mul_stiffness(&q);
        let mut w = sys.solve_mass(&kq)?;
        let a = dot(&kq, &q);
        alpha.push(a);
        basis.push(q);
        mbasis.push(mq);
        // two passes of classical Gram–Schmidt in the M-inner product
        for _ in 0..2 {
            for (b, mb) in basis.iter().zip(&mbasis) {
                let c = dot(mb, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let b = sys.mass_inner(&w, &w).max(0.0).sqrt();

        let done = j + 1 == limit;
        let check = done || j % 8 == 7 || b <= 1e-12 * a.abs();
        if check {
            let (theta, vecs) = ritz_values(&alpha, &beta);
            let m = alpha.len();
            let imax = argmax(&theta);
            let imin = argmin(&theta);
            let res_max = b * vecs[(m - 1, imax)].abs();
            let res_min = b * vecs[(m - 1, imin)].abs();
            let converged = res_max <= tol * theta[imax].abs() && res_min <= tol * theta[imax].abs();
            if converged || b <= 1e-12 * a.abs() || m == n {
                return Ok((theta[imin], theta[imax]));
            }
            if done {
                return Err(Error::EigenNotConverged(m));
            }
        }
        beta.push(b);
        q = w.into_iter().map(|v| v / b).collect();
    }
    Err(Error::EigenNotConverged(limit))
}

#[cfg(test)]
mod tests {
    use crate::fem::{Domain, FemSystem};
    use std::f64::consts::PI;

    fn closed_form(n: usize, k: usize) -> f64 {
        let h = 1.0 / n as f64;
        let c = (k as f64 * PI * h).cos();
        6.0 / (h * h) * (1.0 - c) / (2.0 + c)
    }

    #[test]
    fn matches_closed_form_spectrum_in_1d() {
        for n in [4, 16, 64] {
            let sys = FemSystem::build(Domain::unit_interval(), n).unwrap();
            let (lmin, lmax) = sys.extreme_eigenvalues(600).unwrap();
            assert!((lmin - closed_form(n, 1)).abs() < 1e-8 * lmax, "{n}: {lmin}");
            assert!((lmax - closed_form(n, n - 1)).abs() < 1e-8 * lmax, "{n}: {lmax}");
        }
    }

    #[test]
    fn inverse_constant_tends_to_sqrt12_in_1d() {
        let c32 = FemSystem::build(Domain::unit_interval(), 32)
            .unwrap()
            .inverse_constant()
            .unwrap();
        let c128 = FemSystem::build(Domain::unit_interval(), 128)
            .unwrap()
            .inverse_constant()
            .unwrap();
        assert!((c128 - 12f64.sqrt()).abs() < 1e-3);
        assert!((c32 - c128).abs() < 0.01 * c128);
    }
}
