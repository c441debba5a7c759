use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::fft::{dft, power_spectrum};
use super::filterbank::{apply_filterbank, MelFilterbank};
use super::frame::{frame_signal, pre_emphasis, window_coefficients, FrameConfig};
use super::{CoeffKind, FeatureMatrix};
use crate::audio::AudioClip;
use crate::{Error, Result};

/// Mel energies below this are clamped before the logarithm.
pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// Cepstral coefficients `c(n) = sum_m log10(s(m)) cos(pi n (m + 0.5) / M)`
/// with 0-based `m`. Returns `n = 1..=n_coeffs` when `include_c0` is false,
/// otherwise `n = 0..n_coeffs`.
pub fn dct_log(mel_energies: &[f64], n_coeffs: usize, floor_value: f64, include_c0: bool) -> Result<Vec<f64>> {
    let m_total = mel_energies.len();
    if n_coeffs > m_total {
        return Err(Error::arg(format!(
            "{n_coeffs} cepstral coefficients requested from {m_total} mel energies"
        )));
    }
    let logs: Vec<f64> = mel_energies.iter().map(|&s| s.max(floor_value).log10()).collect();
    let start = usize::from(!include_c0);
    let mf = m_total as f64;
    Ok((start..start + n_coeffs)
        .map(|n| {
            logs.iter()
                .enumerate()
                .map(|(m, l)| l * (PI * n as f64 * (m as f64 + 0.5) / mf).cos())
                .sum()
        })
        .collect())
}

/// Reference MFCCs: one column of `n_coeffs` coefficients per frame,
/// excluding `c(0)`.
pub fn mfcc(clip: &AudioClip, cfg: &FrameConfig, fb: &MelFilterbank, n_coeffs: usize) -> Result<FeatureMatrix> {
    if clip.sample_rate_hz != fb.sample_rate_hz {
        return Err(Error::arg(format!(
            "clip at {} Hz but filterbank built for {} Hz",
            clip.sample_rate_hz, fb.sample_rate_hz
        )));
    }
    if cfg.n_fft != fb.n_fft {
        return Err(Error::arg(format!(
            "frame config n_fft {} differs from filterbank n_fft {}",
            cfg.n_fft, fb.n_fft
        )));
    }
    let (frame_len, hop) = cfg.geometry(clip.sample_rate_hz)?;
    let signal = match cfg.pre_emphasis {
        Some(a) => pre_emphasis(&clip.samples, a),
        None => clip.samples.clone(),
    };
    let window = window_coefficients(cfg.window, frame_len);
    let frames = frame_signal(&signal, frame_len, hop)?;

    let mut values = DMatrix::zeros(n_coeffs, frames.len());
    for (k, frame) in frames.iter().enumerate() {
        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(x, w)| x * w).collect();
        let power = power_spectrum(&dft(&windowed, cfg.n_fft)?);
        let energies = apply_filterbank(&power, fb)?;
        let coeffs = dct_log(&energies, n_coeffs, DEFAULT_LOG_FLOOR, false)?;
        values.set_column(k, &nalgebra::DVector::from_vec(coeffs));
    }
    FeatureMatrix::with_hop(values, CoeffKind::Mfcc, hop as f64 / clip.sample_rate_hz as f64)
}

/// Regression deltas over `+-n` frames with replicated edge frames:
/// `d_t = sum_k k (c_{t+k} - c_{t-k}) / (2 sum_k k^2)`.
pub fn delta(features: &FeatureMatrix, n: usize) -> Result<FeatureMatrix> {
    let frames = features.n_frames();
    if n == 0 {
        return Err(Error::arg("delta window must be at least 1"));
    }
    if frames < 2 * n + 1 {
        return Err(Error::arg(format!("delta over +-{n} frames needs {} frames, got {frames}", 2 * n + 1)));
    }
    let denom = 2.0 * (1..=n).map(|k| (k * k) as f64).sum::<f64>();
    let last = frames as isize - 1;
    let at = |t: isize| t.clamp(0, last) as usize;
    let c = &features.values;
    let out = DMatrix::from_fn(c.nrows(), frames, |row, t| {
        let t = t as isize;
        (1..=n as isize)
            .map(|k| k as f64 * (c[(row, at(t + k))] - c[(row, at(t - k))]))
            .sum::<f64>()
            / denom
    });
    FeatureMatrix::new(out, CoeffKind::Delta, features.frame_times_s.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::make_mel_filterbank;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn direct_dct(s: &[f64], n: usize) -> f64 {
        // Written against the 1-based (m - 0.5) form.
        let m_total = s.len();
        let mut acc = 0.0;
        for m in 1..=m_total {
            acc += s[m - 1].log10() * (PI * n as f64 * (m as f64 - 0.5) / m_total as f64).cos();
        }
        acc
    }

    #[test]
    fn unit_energies_give_zero() {
        let c = dct_log(&[1.0; 25], 14, DEFAULT_LOG_FLOOR, false).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_ten_concentrates_in_c0() {
        let c = dct_log(&[10.0; 25], 25, DEFAULT_LOG_FLOOR, true).unwrap();
        assert!((c[0] - 25.0).abs() < 1e-9);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn matches_direct_summation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let s: Vec<f64> = (0..25).map(|_| rng.gen_range(1e-3..1e3)).collect();
        let c = dct_log(&s, 14, DEFAULT_LOG_FLOOR, false).unwrap();
        for (i, v) in c.iter().enumerate() {
            assert!((v - direct_dct(&s, i + 1)).abs() < 1e-9);
        }
        assert!(dct_log(&s, 26, DEFAULT_LOG_FLOOR, false).is_err());
    }

    proptest! {
        #[test]
        fn linear_in_log_energy(a in 0.1f64..5.0, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..20).map(|_| rng.gen_range(0.01..100.0)).collect();
            let powered: Vec<f64> = s.iter().map(|v| v.powf(a)).collect();
            let base = dct_log(&s, 12, 1e-300, false).unwrap();
            let scaled = dct_log(&powered, 12, 1e-300, false).unwrap();
            for (x, y) in base.iter().zip(&scaled) {
                prop_assert!((a * x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    fn ramp(f: impl Fn(f64) -> f64, frames: usize) -> FeatureMatrix {
        let m = DMatrix::from_fn(2, frames, |r, t| (r + 1) as f64 * f(t as f64));
        FeatureMatrix::with_hop(m, CoeffKind::Mfcc, 0.01).unwrap()
    }

    #[test]
    fn delta_cases() {
        let d = delta(&ramp(|_| 3.0, 9), 2).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));

        let d = delta(&ramp(|t| t, 12), 2).unwrap();
        for t in 2..10 {
            assert!((d.values[(0, t)] - 1.0).abs() < 1e-12);
            assert!((d.values[(1, t)] - 2.0).abs() < 1e-12);
        }

        let dd = delta(&delta(&ramp(|t| t * t, 20), 2).unwrap(), 2).unwrap();
        for t in 4..16 {
            assert!((dd.values[(0, t)] - 2.0).abs() < 1e-9, "t={t}: {}", dd.values[(0, t)]);
        }
        assert!(delta(&ramp(|t| t, 4), 2).is_err());
        assert!(delta(&ramp(|t| t, 4), 0).is_err());
    }

    fn tone(freq: f64, n: usize) -> AudioClip {
        AudioClip::new((0..n).map(|i| (2.0 * PI * freq * i as f64 / 8000.0).sin()).collect(), 8000).unwrap()
    }

    #[test]
    fn silence_is_floor_constant() {
        let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
        let cfg = FrameConfig::default();
        let out = mfcc(&AudioClip::new(vec![0.0; 1200], 8000).unwrap(), &cfg, &fb, 14).unwrap();
        let expect = dct_log(&[0.0; 25], 14, DEFAULT_LOG_FLOOR, false).unwrap();
        for col in out.values.column_iter() {
            for (a, b) in col.iter().zip(&expect) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn pure_tone_is_stationary() {
        let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
        let cfg = FrameConfig { pre_emphasis: None, ..FrameConfig::default() };
        let clip = tone(1000.0, 8000);
        let out = mfcc(&clip, &cfg, &fb, 14).unwrap();
        assert_eq!(out.n_frames(), 98);
        assert_eq!(out.n_coeffs(), 14);
        let c1 = out.values.row(0);
        for t in 1..97 {
            // 1000 Hz has period 8 samples and the hop is 80, so every frame
            // sees the same waveform.
            assert!((c1[t] - c1[1]).abs() < 1e-6);
        }

        let (frame_len, hop) = cfg.geometry(8000).unwrap();
        let frames = frame_signal(&clip.samples, frame_len, hop).unwrap();
        let win = window_coefficients(cfg.window, frame_len);
        let w: Vec<f64> = frames[5].iter().zip(&win).map(|(a, b)| a * b).collect();
        let energies = apply_filterbank(&power_spectrum(&dft(&w, 1024).unwrap()), &fb).unwrap();
        let best = (0..25).max_by(|&a, &b| energies[a].total_cmp(&energies[b])).unwrap();
        let bin = (1000.0f64 / fb.bin_hz()).round() as usize;
        assert!(fb.weights[best][bin] > 0.0);
        assert_eq!(best, fb.dominant_filter(1000.0));
    }

    #[test]
    fn trailing_zeros_within_a_hop_do_not_change_output() {
        let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
        let cfg = FrameConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let samples: Vec<f64> = (0..1000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let base = mfcc(&AudioClip::new(samples.clone(), 8000).unwrap(), &cfg, &fb, 14).unwrap();
        // (1000 - 200) % 80 == 0, so up to 79 extra samples fit before a new frame.
        for extra in [1usize, 40, 79] {
            let mut padded = samples.clone();
            padded.extend(std::iter::repeat(0.0).take(extra));
            let out = mfcc(&AudioClip::new(padded, 8000).unwrap(), &cfg, &fb, 14).unwrap();
            assert_eq!(out, base);
        }
    }

    #[test]
    fn rate_mismatch_rejected() {
        let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
        let clip = AudioClip::new(vec![0.1; 400], 16000).unwrap();
        assert!(mfcc(&clip, &FrameConfig::default(), &fb, 14).is_err());
    }
}
