use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// In-place iterative radix-2 decimation-in-time FFT computing
/// `X(k) = sum_n x(n) exp(-j 2 pi n k / N)`.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    transform(buf, false)
}

/// Unnormalized inverse: applying [`fft_in_place`] then this yields `N * x`.
pub fn ifft_in_place(buf: &mut [Complex64]) -> Result<()> {
    transform(buf, true)
}

fn transform(buf: &mut [Complex64], inverse: bool) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::arg(format!("FFT length {n} is not a power of two")));
    }
    if n == 1 {
        return Ok(());
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }

    // Twiddles are evaluated directly rather than by recurrence so the
    // rounding error stays at the level of a single cos/sin call.
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// DFT of a real frame zero-padded to `n_fft` points.
pub fn dft(frame: &[f64], n_fft: usize) -> Result<Vec<Complex64>> {
    if !n_fft.is_power_of_two() {
        return Err(Error::arg(format!("n_fft {n_fft} is not a power of two")));
    }
    if frame.len() > n_fft {
        return Err(Error::arg(format!(
            "frame of {} samples does not fit in n_fft = {n_fft}",
            frame.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft_in_place(&mut buf)?;
    Ok(buf)
}

/// `|X(k)|^2` for the non-negative frequencies `k = 0..=N/2`.
pub fn power_spectrum(spectrum: &[Complex64]) -> Vec<f64> {
    spectrum[..spectrum.len() / 2 + 1]
        .iter()
        .map(|c| c.norm_sqr())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (i * k % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn impulse_is_flat() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let spec = dft(&x, 16).unwrap();
        for c in &spec {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        assert!(power_spectrum(&spec).iter().all(|&p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn cosine_lands_in_two_bins() {
        let x: Vec<f64> = (0..64).map(|n| (2.0 * PI * n as f64 * 8.0 / 64.0).cos()).collect();
        let spec = dft(&x, 64).unwrap();
        let oracle = naive_dft(&x);
        for k in 0..64 {
            assert!((spec[k] - oracle[k]).norm() < 1e-9);
            if k == 8 || k == 56 {
                assert!((spec[k].norm() - 32.0).abs() < 1e-9);
            } else {
                assert!(spec[k].norm() < 1e-9, "bin {k} = {}", spec[k]);
            }
        }
    }

    #[test]
    fn matches_naive_on_random_input() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [8usize, 64, 256, 1024] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fast = dft(&x, n).unwrap();
            let slow = naive_dft(&x);
            let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n = {n}: {err}");
        }
    }

    #[test]
    fn parseval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..512).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = dft(&x, 512).unwrap();
        let lhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let rhs: f64 = 512.0 * x.iter().map(|v| v * v).sum::<f64>();
        assert!(((lhs - rhs) / rhs).abs() < 1e-6);
    }

    #[test]
    fn inverse_round_trip() {
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut buf = dft(&x, 32).unwrap();
        ifft_in_place(&mut buf).unwrap();
        for (b, v) in buf.iter().zip(&x) {
            assert!((b.re / 32.0 - v).abs() < 1e-12 && b.im.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(dft(&[1.0; 4], 12).is_err());
        assert!(dft(&[1.0; 20], 16).is_err());
        assert!(power_spectrum(&[Complex64::new(0.0, 0.0); 8]).iter().all(|&p| p == 0.0));
    }
}
