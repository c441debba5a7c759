//! Mel-cepstral feature extraction in the frequency and time domains, plus the
//! echo state network machinery used both to mimic the time-domain filterbank
//! convolution and to classify utterances.
//!
//! Module map:
//!
//! * [`audio`]: WAV ingestion, resampling to the canonical 8 kHz rate, and
//!   corpus manifests.
//! * [`dsp`]: the classical MFCC pipeline (framing, windowing, radix-2 FFT,
//!   triangular mel filterbank, log + DCT, deltas) and the shared
//!   [`FeatureMatrix`](dsp::FeatureMatrix) type.
//! * [`esn`]: sparse random reservoirs, leaky tanh state evolution, ridge
//!   readouts, NRMSE, and the `EARC` model container.
//! * [`td`]: the time-domain path: sinusoid-sum filterbank signals,
//!   convolution, trimming, abs-max pooling, and the reservoir that learns to
//!   reproduce the convolution.
//! * [`classify`]: utterance classification, cross-validation protocols and
//!   report statistics.

pub mod audio;
pub mod classify;
pub mod dsp;
mod error;
pub mod esn;
pub mod rng;
pub mod td;

pub use error::{Error, Result};

/// Canonical analysis rate; every clip is resampled to this on ingestion.
pub const CANONICAL_SAMPLE_RATE_HZ: u32 = 8000;
