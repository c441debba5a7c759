//! Kaiser-windowed sinc interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::{Error, Result};

/// Interpolation kernel quality.
///
/// With the defaults the kernel spans 32 zero crossings of the (possibly
/// lowered) cutoff on each side, the Kaiser window uses beta = 8.6 (roughly
/// 85 dB stopband attenuation) and the cutoff sits at 95% of the lower of the
/// two Nyquist frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResamplerConfig {
    pub zero_crossings: usize,
    pub kaiser_beta: f64,
    pub rolloff: f64,
}

impl Default for ResamplerConfig {
    fn default() -> Self {
        Self {
            zero_crossings: 32,
            kaiser_beta: 8.6,
            rolloff: 0.95,
        }
    }
}

pub fn resample(clip: &AudioClip, target_rate_hz: u32) -> Result<AudioClip> {
    resample_with(clip, target_rate_hz, &ResamplerConfig::default())
}

/// Resamples to `target_rate_hz`, keeping the duration within one output
/// sample period. Output that overshoots unit magnitude is rescaled by its
/// peak.
pub fn resample_with(clip: &AudioClip, target_rate_hz: u32, cfg: &ResamplerConfig) -> Result<AudioClip> {
    if target_rate_hz == 0 {
        return Err(Error::arg("target sample rate must be positive"));
    }
    if target_rate_hz == clip.sample_rate_hz {
        return Ok(clip.clone());
    }
    let src_rate = clip.sample_rate_hz as f64;
    let dst_rate = target_rate_hz as f64;
    let ratio = dst_rate / src_rate;
    let out_len = ((clip.len() as f64 * ratio).round() as usize).max(1);

    // Cutoff relative to the input Nyquist frequency.
    let cutoff = cfg.rolloff * ratio.min(1.0);
    let half_width = cfg.zero_crossings as f64 / cutoff;
    let i0_beta = bessel_i0(cfg.kaiser_beta);
    let x = &clip.samples;

    let mut out: Vec<f64> = (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(x.len() - 1);
            (lo..=hi)
                .map(|k| {
                    let d = t - k as f64;
                    x[k] * cutoff * sinc(cutoff * d) * kaiser(d / half_width, cfg.kaiser_beta, i0_beta)
                })
                .sum()
        })
        .collect();

    let peak = out.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        out.iter_mut().for_each(|s| *s /= peak);
    }

    Ok(AudioClip {
        samples: out,
        sample_rate_hz: target_rate_hz,
        digit_label: clip.digit_label,
        speaker_label: clip.speaker_label.clone(),
        source_path: clip.source_path.clone(),
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn kaiser(pos: f64, beta: f64, i0_beta: f64) -> f64 {
    if pos.abs() > 1.0 {
        0.0
    } else {
        bessel_i0(beta * (1.0 - pos * pos).sqrt()) / i0_beta
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
