use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader};

use super::AudioClip;
use crate::{Error, Result};

/// Decodes a RIFF/WAVE file (PCM 8/16/24/32-bit or IEEE float32) into a mono
/// clip. Integer samples are divided by their full-scale value `2^(bits-1)`;
/// stereo channels are averaged.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("{} channels (only mono and stereo are supported)", spec.channels),
        });
    }
    if spec.sample_rate == 0 {
        return Err(Error::Format {
            path: path.into(),
            reason: "zero sample rate".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let full_scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?
        }
        (format, bits) => {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("{format:?} samples with {bits} bits"),
            })
        }
    };

    let channels = spec.channels as usize;
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.is_empty() {
        return Err(Error::EmptyAudio(path.into()));
    }
    if mono.iter().any(|s| !s.is_finite()) {
        return Err(Error::Format {
            path: path.into(),
            reason: "non-finite float sample".into(),
        });
    }

    let mut clip = AudioClip {
        samples: mono,
        sample_rate_hz: spec.sample_rate,
        digit_label: None,
        speaker_label: None,
        source_path: path.display().to_string(),
    };
    clip.clamp_to_unit();
    Ok(clip)
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == ErrorKind::UnexpectedEof => Error::Format {
            path: path.into(),
            reason: "truncated file".into(),
        },
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::FormatError(reason) => Error::Format {
            path: path.into(),
            reason: reason.into(),
        },
        hound::Error::Unsupported => Error::UnsupportedFormat {
            path: path.into(),
            reason: "codec not supported".into(),
        },
        other => Error::Format {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}
