//! Audio ingestion: WAV decoding, band-limited resampling, and corpus
//! manifests for the spoken-digit datasets.

mod clip;
mod manifest;
mod resample;
mod wav;

pub use clip::AudioClip;
pub use manifest::{build_manifest, DatasetManifest, ManifestEntry, NamingScheme};
pub use resample::{resample, resample_with, ResamplerConfig};
pub use wav::load_wav;

use std::path::Path;

use crate::Result;

/// Load a WAV file, resample it to `target_rate_hz` and attach labels.
pub fn load_labelled(
    path: &Path,
    digit: Option<u8>,
    speaker: Option<&str>,
    target_rate_hz: u32,
) -> Result<AudioClip> {
    let clip = load_wav(path)?;
    let mut clip = resample(&clip, target_rate_hz)?;
    clip.digit_label = digit;
    clip.speaker_label = speaker.map(str::to_owned);
    Ok(clip)
}
