//! Frequency-domain MFCC pipeline.
//!
//! `frame_signal -> apply_window -> dft -> power_spectrum -> apply_filterbank
//! -> dct_log`, composed per frame by [`mfcc`].

mod cepstrum;
mod features;
mod fft;
mod filterbank;
mod frame;
mod mel;
mod normalize;

pub use cepstrum::{dct_log, delta, mfcc, DEFAULT_LOG_FLOOR};
pub use features::{CoeffKind, FeatureMatrix};
pub use fft::{dft, fft_in_place, ifft_in_place, power_spectrum};
pub use filterbank::{apply_filterbank, make_mel_filterbank, MelFilterbank};
pub use frame::{apply_window, frame_count, frame_signal, pre_emphasis, FrameConfig, WindowKind};
pub use mel::{hz_to_mel, mel_to_hz};
pub use normalize::ZScore;

pub use num_complex::Complex64;
