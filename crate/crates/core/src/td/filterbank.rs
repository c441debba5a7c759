use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dsp::MelFilterbank;
use crate::{Error, Result};

/// One sinusoidal component of a time-domain filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdChannel {
    pub pairs: Vec<FilterPair>,
    pub signal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainFilterbank {
    pub channels: Vec<TdChannel>,
    pub sample_rate_hz: u32,
    pub signal_len: usize,
}

/// One pair per FFT bin under the channel's triangle: the bin's centre
/// frequency and its triangle weight divided by the channel's weight sum.
pub fn derive_filter_pairs(fb: &MelFilterbank, channel: usize) -> Result<Vec<FilterPair>> {
    let row = fb
        .weights
        .get(channel)
        .ok_or_else(|| Error::arg(format!("channel {channel} out of range for {} filters", fb.n_filters)))?;
    let total: f64 = row.iter().sum();
    let bin_hz = fb.bin_hz();
    let pairs: Vec<FilterPair> = row
        .iter()
        .enumerate()
        .filter(|&(k, &w)| w > 0.0 && k > 0)
        .map(|(k, &w)| FilterPair {
            freq_hz: k as f64 * bin_hz,
            amplitude: w / total,
        })
        .collect();
    if pairs.len() < 2 {
        return Err(Error::DegenerateFilter { index: channel });
    }
    Ok(pairs)
}

/// `s[n] = sum_k A_k sin(2 pi f_k n / fs)`.
pub fn synth_filter_signal(pairs: &[FilterPair], n_samples: usize, sample_rate_hz: u32) -> Vec<f64> {
    let fs = sample_rate_hz as f64;
    (0..n_samples)
        .map(|n| {
            pairs
                .iter()
                .map(|p| p.amplitude * (2.0 * PI * p.freq_hz * n as f64 / fs).sin())
                .sum()
        })
        .collect()
}

/// Reads `channel,freq_hz,amplitude` rows (0-based channels) into per-channel
/// pair lists sorted by frequency.
pub fn read_pairs_override<R: Read>(reader: R) -> Result<BTreeMap<usize, Vec<FilterPair>>> {
    #[derive(Deserialize)]
    struct Row {
        channel: usize,
        freq_hz: f64,
        amplitude: f64,
    }
    let mut out: BTreeMap<usize, Vec<FilterPair>> = BTreeMap::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: Row = row?;
        if !(row.freq_hz > 0.0 && row.amplitude > 0.0) {
            return Err(Error::arg(format!(
                "override pair for channel {} needs positive frequency and amplitude",
                row.channel
            )));
        }
        out.entry(row.channel).or_default().push(FilterPair {
            freq_hz: row.freq_hz,
            amplitude: row.amplitude,
        });
    }
    for pairs in out.values_mut() {
        pairs.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
    }
    Ok(out)
}

impl TimeDomainFilterbank {
    pub fn from_pairs(pairs: Vec<Vec<FilterPair>>, sample_rate_hz: u32, signal_len: usize) -> Result<Self> {
        if signal_len == 0 || sample_rate_hz == 0 {
            return Err(Error::arg("filter signals need a positive length and sample rate"));
        }
        if pairs.is_empty() {
            return Err(Error::arg("time-domain filterbank needs at least one channel"));
        }
        let channels = pairs
            .into_iter()
            .map(|pairs| {
                let signal = synth_filter_signal(&pairs, signal_len, sample_rate_hz);
                TdChannel { pairs, signal }
            })
            .collect();
        Ok(Self {
            channels,
            sample_rate_hz,
            signal_len,
        })
    }

    /// Derives every channel from a frequency-domain mel filterbank.
    pub fn from_mel(fb: &MelFilterbank, signal_len: usize) -> Result<Self> {
        let pairs = (0..fb.n_filters)
            .map(|c| derive_filter_pairs(fb, c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_pairs(pairs, fb.sample_rate_hz, signal_len)
    }

    /// Replaces the pairs of the listed channels.
    pub fn with_overrides(self, overrides: &BTreeMap<usize, Vec<FilterPair>>) -> Result<Self> {
        let mut pairs: Vec<Vec<FilterPair>> = self.channels.into_iter().map(|c| c.pairs).collect();
        let n_channels = pairs.len();
        for (&ch, p) in overrides {
            let slot = pairs
                .get_mut(ch)
                .ok_or_else(|| Error::arg(format!("override for channel {ch} but bank has {n_channels} channels")))?;
            *slot = p.clone();
        }
        Self::from_pairs(pairs, self.sample_rate_hz, self.signal_len)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::make_mel_filterbank;

    #[test]
    fn first_reference_channel_is_a_triangle() {
        let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
        let pairs = derive_filter_pairs(&fb, 0).unwrap();
        // Edges snap to bins 0, 7 and 14: thirteen interior bins.
        assert_eq!(pairs.len(), 13);
        assert_eq!(pairs[0].freq_hz, 7.8125);
        assert_eq!(pairs[12].freq_hz, 13.0 * 7.8125);
        assert!(pairs.windows(2).all(|w| w[0].freq_hz < w[1].freq_hz));
        let total: f64 = pairs.iter().map(|p| p.amplitude).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_positive_and_unimodal() {
        let fb = make_mel_filterbank(10, 1024, 0.0, 4000.0, 8000).unwrap();
        for c in 0..10 {
            let a: Vec<f64> = derive_filter_pairs(&fb, c).unwrap().iter().map(|p| p.amplitude).collect();
            assert!(a.iter().all(|&v| v > 0.0));
            let peak = a.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
            assert!(a[..=peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(a[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(derive_filter_pairs(&fb, 10).is_err());
    }

    #[test]
    fn single_sine() {
        let s = synth_filter_signal(&[FilterPair { freq_hz: 100.0, amplitude: 1.0 }], 400, 8000);
        assert_eq!(s[0], 0.0);
        assert!(s.iter().all(|v| v.abs() <= 1.0));
        assert!((s[20] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn superposition() {
        let a = [FilterPair { freq_hz: 131.0, amplitude: 0.2 }, FilterPair { freq_hz: 300.0, amplitude: 0.1 }];
        let b = [FilterPair { freq_hz: 777.0, amplitude: 0.05 }];
        let both: Vec<FilterPair> = a.iter().chain(&b).copied().collect();
        let sa = synth_filter_signal(&a, 200, 8000);
        let sb = synth_filter_signal(&b, 200, 8000);
        let sab = synth_filter_signal(&both, 200, 8000);
        for i in 0..200 {
            assert_eq!(sab[i], sa[i] + sb[i]);
        }
    }

    #[test]
    fn override_parsing() {
        let csv = "channel,freq_hz,amplitude\n0,141,0.5\n0,131,0.25\n2,500,1\n";
        let map = read_pairs_override(csv.as_bytes()).unwrap();
        assert_eq!(map[&0][0], FilterPair { freq_hz: 131.0, amplitude: 0.25 });
        assert_eq!(map[&2].len(), 1);
        assert!(read_pairs_override("channel,freq_hz,amplitude\n0,-3,1\n".as_bytes()).is_err());

        let fb = make_mel_filterbank(10, 1024, 0.0, 4000.0, 8000).unwrap();
        let tdfb = TimeDomainFilterbank::from_mel(&fb, 200).unwrap().with_overrides(&map).unwrap();
        assert_eq!(tdfb.channels[0].pairs.len(), 2);
        assert_eq!(tdfb.channels[0].signal, synth_filter_signal(&map[&0], 200, 8000));
        let bad: BTreeMap<usize, Vec<FilterPair>> = [(99, vec![])].into_iter().collect();
        assert!(TimeDomainFilterbank::from_mel(&fb, 200).unwrap().with_overrides(&bad).is_err());
    }
}
