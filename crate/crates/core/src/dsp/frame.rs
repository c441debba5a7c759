use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hamming,
    Hanning,
}

/// Short-time analysis geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub window: WindowKind,
    pub n_fft: usize,
    /// First-order pre-emphasis coefficient; `None` disables the stage.
    pub pre_emphasis: Option<f64>,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len_ms: 25.0,
            hop_ms: 10.0,
            window: WindowKind::Hamming,
            n_fft: 1024,
            pre_emphasis: Some(0.97),
        }
    }
}

impl FrameConfig {
    /// `(frame_len, hop)` in samples, after checking the config invariants.
    pub fn geometry(&self, sample_rate_hz: u32) -> Result<(usize, usize)> {
        if !(self.hop_ms > 0.0 && self.hop_ms <= self.frame_len_ms) {
            return Err(Error::arg(format!(
                "need 0 < hop_ms <= frame_len_ms, got hop {} frame {}",
                self.hop_ms, self.frame_len_ms
            )));
        }
        if let Some(a) = self.pre_emphasis {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::arg(format!("pre-emphasis must lie in [0, 1), got {a}")));
            }
        }
        let frame_len = (self.frame_len_ms * sample_rate_hz as f64 / 1000.0).round() as usize;
        let hop = (self.hop_ms * sample_rate_hz as f64 / 1000.0).round() as usize;
        if frame_len < 2 || hop == 0 {
            return Err(Error::arg("frame must span at least two samples"));
        }
        if !self.n_fft.is_power_of_two() || self.n_fft < frame_len {
            return Err(Error::arg(format!(
                "n_fft must be a power of two >= frame length {frame_len}, got {}",
                self.n_fft
            )));
        }
        Ok((frame_len, hop))
    }

    /// Number of frames [`mfcc`](super::mfcc) emits for a clip of `n_samples`.
    pub fn frames_for(&self, n_samples: usize, sample_rate_hz: u32) -> Result<usize> {
        let (frame_len, hop) = self.geometry(sample_rate_hz)?;
        Ok(frame_count(n_samples, frame_len, hop))
    }
}

/// `floor((len - frame_len) / hop) + 1`, and 1 for clips shorter than a frame.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len <= frame_len {
        1
    } else {
        (len - frame_len) / hop + 1
    }
}

/// Splits `samples` into overlapping frames starting at multiples of `hop`.
/// Only a clip shorter than one frame produces a zero-padded frame.
pub fn frame_signal(samples: &[f64], frame_len: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::arg("cannot frame an empty signal"));
    }
    if frame_len == 0 || hop == 0 {
        return Err(Error::arg("frame length and hop must be positive"));
    }
    let n = frame_count(samples.len(), frame_len, hop);
    Ok((0..n)
        .map(|k| {
            let start = k * hop;
            let end = (start + frame_len).min(samples.len());
            let mut frame = samples[start..end].to_vec();
            frame.resize(frame_len, 0.0);
            frame
        })
        .collect())
}

pub fn window_coefficients(kind: WindowKind, len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let c = (2.0 * PI * n as f64 / denom).cos();
            match kind {
                WindowKind::Hamming => 0.54 - 0.46 * c,
                WindowKind::Hanning => 0.5 - 0.5 * c,
            }
        })
        .collect()
}

pub fn apply_window(frame: &[f64], kind: WindowKind) -> Result<Vec<f64>> {
    if frame.len() < 2 {
        return Err(Error::arg("window needs at least two samples"));
    }
    Ok(frame
        .iter()
        .zip(window_coefficients(kind, frame.len()))
        .map(|(x, w)| x * w)
        .collect())
}

/// `y[n] = x[n] - a * x[n-1]`, with `y[0] = x[0]`.
pub fn pre_emphasis(samples: &[f64], coeff: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = 0.0;
    for &x in samples {
        out.push(x - coeff * prev);
        prev = x;
    }
    out
}
