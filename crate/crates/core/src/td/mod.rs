//! Time-domain mel features.
//!
//! Each mel channel becomes a short signal built by summing sinusoids at the
//! FFT-bin frequencies under its triangle. Convolving audio with these
//! signals, trimming to the audio length and abs-max pooling one value per
//! analysis frame yields a `channels x frames` feature matrix with the same
//! frame count as the reference MFCCs. A small reservoir can be trained to
//! produce the convolution streams directly from raw samples.

mod conv;
mod extractor;
mod filterbank;

pub use conv::{convolve, pool_abs_max, pool_spans, trim};
pub use extractor::{
    evaluate_mimic, td_mfcc_reservoir, train_conv_reservoir, ConvFeatureExtractor, ExtractorTraining,
    ExtractorTrainingReport, MimicUnit, ReadoutMode,
};
pub use filterbank::{
    derive_filter_pairs, read_pairs_override, synth_filter_signal, FilterPair, TdChannel, TimeDomainFilterbank,
};

use nalgebra::DMatrix;

use crate::audio::AudioClip;
use crate::dsp::{CoeffKind, FeatureMatrix};
use crate::{Error, Result};

/// Anything that can produce one convolution stream per mel channel, each as
/// long as the clip.
pub trait ConvolutionSource: Sync {
    fn n_channels(&self) -> usize;
    fn sample_rate_hz(&self) -> u32;
    fn channel_streams(&self, clip: &AudioClip) -> Result<Vec<Vec<f64>>>;
}

/// Exact convolution with the filterbank signals, trimmed to the clip length.
pub struct DirectConvolution<'a>(pub &'a TimeDomainFilterbank);

impl ConvolutionSource for DirectConvolution<'_> {
    fn n_channels(&self) -> usize {
        self.0.n_channels()
    }

    fn sample_rate_hz(&self) -> u32 {
        self.0.sample_rate_hz
    }

    fn channel_streams(&self, clip: &AudioClip) -> Result<Vec<Vec<f64>>> {
        self.0
            .channels
            .iter()
            .map(|ch| trim(&convolve(&clip.samples, &ch.signal)?, clip.len()))
            .collect()
    }
}

/// Pools every stream from `source` into `n_frames` abs-max values.
pub fn td_mfcc_with(clip: &AudioClip, source: &dyn ConvolutionSource, n_frames: usize) -> Result<FeatureMatrix> {
    if clip.sample_rate_hz != source.sample_rate_hz() {
        return Err(Error::arg(format!(
            "clip at {} Hz, time-domain filterbank at {} Hz",
            clip.sample_rate_hz,
            source.sample_rate_hz()
        )));
    }
    let streams = source.channel_streams(clip)?;
    pool_streams(&streams, n_frames, clip.sample_rate_hz)
}

/// Direct (exact convolution) time-domain features.
pub fn td_mfcc_direct(clip: &AudioClip, tdfb: &TimeDomainFilterbank, n_frames: usize) -> Result<FeatureMatrix> {
    td_mfcc_with(clip, &DirectConvolution(tdfb), n_frames)
}

fn pool_streams(streams: &[Vec<f64>], n_frames: usize, sample_rate_hz: u32) -> Result<FeatureMatrix> {
    let len = streams.first().map_or(0, Vec::len);
    let mut values = DMatrix::zeros(streams.len(), n_frames);
    for (c, s) in streams.iter().enumerate() {
        let pooled = pool_abs_max(s, n_frames)?;
        values.row_mut(c).iter_mut().zip(pooled).for_each(|(d, v)| *d = v);
    }
    let times = pool_spans(len, n_frames)?
        .into_iter()
        .map(|r| r.start as f64 / sample_rate_hz as f64)
        .collect();
    FeatureMatrix::new(values, CoeffKind::TdMfcc, times)
}

/// Optional compression `log10(|x| + 1e-10)` applied after pooling.
pub fn log_compress(features: &FeatureMatrix) -> FeatureMatrix {
    let mut out = features.clone();
    out.values.apply(|v| *v = (v.abs() + 1e-10).log10());
    out
}
