use serde::{Deserialize, Serialize};

use super::mel::{hz_to_mel, mel_to_hz};
use crate::{Error, Result};

/// Triangular filters with centres uniformly spaced on the mel axis, sampled
/// on the `n_fft / 2 + 1` non-negative FFT bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelFilterbank {
    /// `n_filters` rows of `n_fft / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
    pub center_freqs_hz: Vec<f64>,
    /// `n_filters + 2` band edges snapped to FFT bins. Filter `i` spans
    /// `edge_bins[i]..=edge_bins[i + 2]` and peaks at `edge_bins[i + 1]`.
    pub edge_bins: Vec<usize>,
    pub n_filters: usize,
    pub n_fft: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub sample_rate_hz: u32,
}

pub fn make_mel_filterbank(
    n_filters: usize,
    n_fft: usize,
    fmin_hz: f64,
    fmax_hz: f64,
    sample_rate_hz: u32,
) -> Result<MelFilterbank> {
    if n_filters == 0 {
        return Err(Error::arg("need at least one mel filter"));
    }
    if !n_fft.is_power_of_two() || n_fft < 2 {
        return Err(Error::arg(format!("n_fft {n_fft} is not a power of two")));
    }
    if sample_rate_hz == 0 || !(0.0 <= fmin_hz && fmin_hz < fmax_hz && fmax_hz <= sample_rate_hz as f64 / 2.0) {
        return Err(Error::arg(format!(
            "need 0 <= fmin < fmax <= fs/2, got fmin {fmin_hz} fmax {fmax_hz} fs {sample_rate_hz}"
        )));
    }

    let mel_lo = hz_to_mel(fmin_hz)?;
    let mel_hi = hz_to_mel(fmax_hz)?;
    let step = (mel_hi - mel_lo) / (n_filters + 1) as f64;
    let edges_hz = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_lo + step * i as f64))
        .collect::<Result<Vec<_>>>()?;
    let bin_hz = sample_rate_hz as f64 / n_fft as f64;
    let edge_bins: Vec<usize> = edges_hz.iter().map(|f| (f / bin_hz).round() as usize).collect();

    let n_bins = n_fft / 2 + 1;
    let mut weights = Vec::with_capacity(n_filters);
    for i in 0..n_filters {
        let (lo, mid, hi) = (edge_bins[i], edge_bins[i + 1], edge_bins[i + 2]);
        if lo >= mid || mid >= hi {
            return Err(Error::DegenerateFilter { index: i });
        }
        let row = (0..n_bins)
            .map(|k| {
                if k <= lo || k >= hi {
                    0.0
                } else if k <= mid {
                    (k - lo) as f64 / (mid - lo) as f64
                } else {
                    (hi - k) as f64 / (hi - mid) as f64
                }
            })
            .collect();
        weights.push(row);
    }

    Ok(MelFilterbank {
        weights,
        center_freqs_hz: edges_hz[1..=n_filters].to_vec(),
        edge_bins,
        n_filters,
        n_fft,
        fmin_hz,
        fmax_hz,
        sample_rate_hz,
    })
}

impl MelFilterbank {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / self.n_fft as f64
    }

    /// Index of the filter whose triangle has the largest weight at `freq_hz`.
    pub fn dominant_filter(&self, freq_hz: f64) -> usize {
        let bin = ((freq_hz / self.bin_hz()).round() as usize).min(self.n_bins() - 1);
        (0..self.n_filters)
            .max_by(|&a, &b| self.weights[a][bin].total_cmp(&self.weights[b][bin]))
            .unwrap_or(0)
    }
}

/// `s(m) = sum_k W[m][k] P(k)`.
pub fn apply_filterbank(power: &[f64], fb: &MelFilterbank) -> Result<Vec<f64>> {
    if power.len() != fb.n_bins() {
        return Err(Error::DimensionMismatch(format!(
            "power spectrum has {} bins, filterbank expects {}",
            power.len(),
            fb.n_bins()
        )));
    }
    Ok(fb
        .weights
        .iter()
        .map(|row| row.iter().zip(power).map(|(w, p)| w * p).sum())
        .collect())
}
