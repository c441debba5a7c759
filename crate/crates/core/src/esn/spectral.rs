//! Spectral radius by block power iteration.
//!
//! A single-vector power method stalls when the dominant eigenvalue of a
//! random non-symmetric matrix is a complex-conjugate pair, so a small block
//! of vectors is iterated instead and the Rayleigh-Ritz values of the
//! projected matrix `Q^T A Q` are tracked. With a block of one vector this is
//! the classic Rayleigh quotient.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use rand::Rng;

use super::CsrMatrix;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

const BLOCK: usize = 8;
const START_SEED: u64 = 0x5EED_0F5A;

/// Largest eigenvalue magnitude, relative tolerance `1e-6`, at most `10 N`
/// iterations.
pub fn spectral_radius(m: &CsrMatrix) -> Result<f64> {
    spectral_radius_with(m, 1e-6, 10 * m.dim().max(1))
}

pub fn spectral_radius_with(m: &CsrMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::arg("spectral radius of an empty matrix"));
    }
    let p = BLOCK.min(n);
    let mut rng = rng_from_seed(START_SEED);
    let start = DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
    let mut q = start.qr().q();

    let mut prev = f64::NAN;
    let mut estimate = 0.0;
    let mut settled = 0;
    for _ in 0..max_iter {
        let w = m.mul_dense(&q);
        if w.norm() == 0.0 {
            // The block fell into the null space: A^k v = 0 for a nilpotent A.
            return Ok(0.0);
        }
        let h = q.transpose() * &w;
        estimate = ritz_radius(h)?;
        if (estimate - prev).abs() <= tol * estimate.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return Ok(estimate);
            }
        } else {
            settled = 0;
        }
        prev = estimate;
        q = w.qr().q();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        estimate,
    })
}

fn ritz_radius(h: DMatrix<f64>) -> Result<f64> {
    let schur = Schur::try_new(h, f64::EPSILON, 10_000).ok_or(Error::NoConvergence {
        iterations: 10_000,
        estimate: f64::NAN,
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn diagonal() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -0.9, 0.5]));
        let r = spectral_radius(&CsrMatrix::from_dense(&d)).unwrap();
        assert!((r - 0.9).abs() < 1e-6);
    }

    #[test]
    fn scaled_identity() {
        for n in [1usize, 5, 40] {
            let m = CsrMatrix::from_triples(n, (0..n).map(|i| (i, i, 0.7)));
            assert!((spectral_radius(&m).unwrap() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_pair() {
        // Eigenvalues 0.8 e^{+-i pi/3} plus a smaller real one.
        let (c, s) = (0.8 * (std::f64::consts::PI / 3.0).cos(), 0.8 * (std::f64::consts::PI / 3.0).sin());
        let d = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 0.2]);
        assert!((spectral_radius(&CsrMatrix::from_dense(&d)).unwrap() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn nilpotent_is_zero() {
        let m = CsrMatrix::from_triples(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0)]);
        assert_eq!(spectral_radius(&m).unwrap(), 0.0);
    }

    #[test]
    fn random_dense_matches_eigensolver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
        for _ in 0..3 {
            let d = DMatrix::from_fn(50, 50, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let oracle = d.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
            let est = spectral_radius(&CsrMatrix::from_dense(&d)).unwrap();
            assert!(((est - oracle) / oracle).abs() < 1e-4, "{est} vs {oracle}");
        }
    }

    #[test]
    fn non_convergence_reports_estimate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = DMatrix::from_fn(60, 60, |_, _| rng.gen::<f64>() - 0.5);
        match spectral_radius_with(&CsrMatrix::from_dense(&d), 1e-15, 2) {
            Err(Error::NoConvergence { iterations: 2, estimate }) => assert!(estimate > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
