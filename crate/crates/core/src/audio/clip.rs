use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A mono clip with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub digit_label: Option<u8>,
    pub speaker_label: Option<String>,
    pub source_path: String,
}

impl AudioClip {
    /// Builds a clip, rejecting empty or non-finite input. Samples that exceed
    /// unit magnitude are rescaled by the peak so the clip ends up in `[-1, 1]`.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::arg("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::EmptyAudio("<memory>".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::arg("audio samples must be finite"));
        }
        let mut clip = AudioClip {
            samples,
            sample_rate_hz,
            digit_label: None,
            speaker_label: None,
            source_path: String::new(),
        };
        clip.clamp_to_unit();
        Ok(clip)
    }

    pub fn with_labels(mut self, digit: Option<u8>, speaker: Option<&str>) -> Self {
        self.digit_label = digit;
        self.speaker_label = speaker.map(str::to_owned);
        self
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    pub(crate) fn clamp_to_unit(&mut self) {
        let peak = self.peak();
        if peak > 1.0 {
            self.samples.iter_mut().for_each(|s| *s /= peak);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nan() {
        assert!(matches!(AudioClip::new(vec![], 8000), Err(Error::EmptyAudio(_))));
        assert!(AudioClip::new(vec![f64::NAN], 8000).is_err());
        assert!(AudioClip::new(vec![0.1], 0).is_err());
    }

    #[test]
    fn overshoot_is_rescaled() {
        let clip = AudioClip::new(vec![0.5, -2.0, 1.0], 8000).unwrap();
        assert_eq!(clip.samples, vec![0.25, -1.0, 0.5]);
    }
}
