use std::ops::Range;

use crate::{Error, Result};

/// Full linear convolution by direct summation, length `Na + Nf - 1`.
pub fn convolve(audio: &[f64], filter: &[f64]) -> Result<Vec<f64>> {
    if audio.is_empty() || filter.is_empty() {
        return Err(Error::arg("convolution operands must be non-empty"));
    }
    let mut out = vec![0.0; audio.len() + filter.len() - 1];
    for (m, &a) in audio.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &f) in out[m..m + filter.len()].iter_mut().zip(filter) {
            *o += a * f;
        }
    }
    Ok(out)
}

/// Keeps the first `audio_len` samples.
pub fn trim(conv: &[f64], audio_len: usize) -> Result<Vec<f64>> {
    if conv.len() < audio_len {
        return Err(Error::arg(format!(
            "cannot trim {} samples to {audio_len}",
            conv.len()
        )));
    }
    Ok(conv[..audio_len].to_vec())
}

/// Contiguous spans covering `len` samples: every span has `len / n`
/// samples and the first `len % n` spans get one more.
pub fn pool_spans(len: usize, n_windows: usize) -> Result<Vec<Range<usize>>> {
    if n_windows == 0 {
        return Err(Error::arg("need at least one pooling window"));
    }
    if n_windows > len {
        return Err(Error::arg(format!("{n_windows} pooling windows over {len} samples")));
    }
    let (base, extra) = (len / n_windows, len % n_windows);
    let mut start = 0;
    Ok((0..n_windows)
        .map(|i| {
            let end = start + base + usize::from(i < extra);
            let r = start..end;
            start = end;
            r
        })
        .collect())
}

/// Largest-magnitude sample of each span, sign preserved (first one wins
/// ties).
pub fn pool_abs_max(signal: &[f64], n_windows: usize) -> Result<Vec<f64>> {
    Ok(pool_spans(signal.len(), n_windows)?
        .into_iter()
        .map(|r| {
            signal[r]
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best })
        })
        .collect())
}
