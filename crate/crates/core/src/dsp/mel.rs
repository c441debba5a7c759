use crate::{Error, Result};

/// `2595 * log10(1 + f / 700)`.
pub fn hz_to_mel(f_hz: f64) -> Result<f64> {
    if !(f_hz >= 0.0) {
        return Err(Error::arg(format!("frequency must be non-negative, got {f_hz}")));
    }
    Ok(2595.0 * (f_hz / 700.0).ln_1p() / std::f64::consts::LN_10)
}

/// Inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if !(mel >= 0.0) {
        return Err(Error::arg(format!("mel value must be non-negative, got {mel}")));
    }
    Ok(700.0 * (mel / 2595.0 * std::f64::consts::LN_10).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn anchors() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        // 2595 * log10(2)
        assert!((hz_to_mel(700.0).unwrap() - 781.172_838).abs() < 1e-3);
        assert!((hz_to_mel(1000.0).unwrap() - 999.99).abs() < 0.01);
        assert_eq!(mel_to_hz(0.0).unwrap(), 0.0);
        assert!((mel_to_hz(781.172_838).unwrap() - 700.0).abs() < 1e-3);
    }

    #[test]
    fn negative_rejected() {
        assert!(hz_to_mel(-1.0).is_err());
        assert!(mel_to_hz(-0.5).is_err());
        assert!(hz_to_mel(f64::NAN).is_err());
    }

    #[test]
    fn round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let f: f64 = rng.gen_range(0.0..4000.0);
            let back = mel_to_hz(hz_to_mel(f).unwrap()).unwrap();
            assert!((back - f).abs() <= 1e-9 * f.max(1e-300));
        }
    }
}
