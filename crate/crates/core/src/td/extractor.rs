use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{convolve, trim, ConvolutionSource, FilterPair, TimeDomainFilterbank};
use crate::audio::AudioClip;
use crate::esn::{apply_readout, init_reservoir, nrmse, ByteReader, ByteWriter, EarcModel, Esn, EsnConfig, Readout, RidgeAccumulator};
use crate::rng::derive_seed;
use crate::{Error, Result};

const TAG_FILTERBANK: &[u8; 4] = b"TDFB";
const TAG_CHANNELS: &[u8; 4] = b"TDCH";
const TAG_UNIT: &[u8; 4] = b"UNIT";
const TAG_NRMSE: &[u8; 4] = b"TDNR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// One reservoir, one readout with a row per channel.
    #[default]
    Joint,
    /// A separately seeded reservoir and single-row readout per channel.
    PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorTraining {
    pub esn: EsnConfig,
    pub ridge_lambda: f64,
    /// Samples dropped at the start of every clip.
    pub washout: usize,
    /// Trailing share of every clip's post-washout samples kept out of the
    /// fit and used for the training NRMSE.
    pub heldback_fraction: f64,
    pub mode: ReadoutMode,
}

impl Default for ExtractorTraining {
    fn default() -> Self {
        Self {
            esn: EsnConfig {
                n_nodes: 35,
                leak_rate: 1.0,
                input_scale: 0.2,
                ..EsnConfig::default()
            },
            ridge_lambda: 1e-6,
            washout: 100,
            heldback_fraction: 0.2,
            mode: ReadoutMode::Joint,
        }
    }
}

impl ExtractorTraining {
    pub fn validate(&self) -> Result<()> {
        self.esn.validate()?;
        if self.esn.input_dim != 1 {
            return Err(Error::arg("the convolution reservoir takes a scalar sample stream (input_dim = 1)"));
        }
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::arg("ridge_lambda must be non-negative"));
        }
        if !(self.heldback_fraction > 0.0 && self.heldback_fraction < 1.0) {
            return Err(Error::arg("heldback_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// A reservoir and readout producing the streams of `channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct MimicUnit {
    pub esn: Esn,
    pub readout: Readout,
    pub channels: Vec<usize>,
}

/// A trained reservoir substitute for the filterbank convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFeatureExtractor {
    pub units: Vec<MimicUnit>,
    pub tdfb: TimeDomainFilterbank,
    pub training_nrmse: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractorTrainingReport {
    /// Source paths (or indices) of clips too short for the washout.
    pub skipped: Vec<String>,
    pub fit_steps: usize,
    pub heldback_steps: usize,
}

struct ClipPass {
    acc: RidgeAccumulator,
    held_states: DMatrix<f64>,
    held_targets: DMatrix<f64>,
}

fn target_streams(clip: &AudioClip, tdfb: &TimeDomainFilterbank, channels: &[usize]) -> Result<DMatrix<f64>> {
    let len = clip.len();
    let mut t = DMatrix::zeros(channels.len(), len);
    for (r, &c) in channels.iter().enumerate() {
        let s = trim(&convolve(&clip.samples, &tdfb.channels[c].signal)?, len)?;
        t.row_mut(r).iter_mut().zip(s).for_each(|(d, v)| *d = v);
    }
    Ok(t)
}

fn clip_pass(esn: &Esn, clip: &AudioClip, tdfb: &TimeDomainFilterbank, channels: &[usize], cfg: &ExtractorTraining) -> Result<ClipPass> {
    let states = esn.collect_states_scalar(&clip.samples)?;
    let targets = target_streams(clip, tdfb, channels)?;
    let usable = clip.len() - cfg.washout;
    let held = ((usable as f64 * cfg.heldback_fraction).round() as usize).clamp(1, usable.saturating_sub(1).max(1));
    let fit = usable - held;
    let mut acc = RidgeAccumulator::new(esn.n_nodes(), channels.len());
    if fit > 0 {
        acc.add(states.columns(cfg.washout, fit), targets.columns(cfg.washout, fit))?;
    }
    let start = cfg.washout + fit;
    Ok(ClipPass {
        acc,
        held_states: states.columns(start, held).into_owned(),
        held_targets: targets.columns(start, held).into_owned(),
    })
}

fn train_unit(
    clips: &[&AudioClip],
    tdfb: &TimeDomainFilterbank,
    esn_cfg: &EsnConfig,
    channels: Vec<usize>,
    cfg: &ExtractorTraining,
) -> Result<(MimicUnit, Vec<f64>, usize, usize)> {
    let esn = init_reservoir(esn_cfg)?;
    let passes = clips
        .par_iter()
        .map(|clip| clip_pass(&esn, clip, tdfb, &channels, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = RidgeAccumulator::new(esn.n_nodes(), channels.len());
    passes.iter().for_each(|p| acc.merge(&p.acc));
    if acc.count() == 0 {
        return Err(Error::NoUsableData("no training samples left after washout".into()));
    }
    let readout = acc.solve(cfg.ridge_lambda)?;

    let held: usize = passes.iter().map(|p| p.held_states.ncols()).sum();
    let mut pred = Vec::with_capacity(channels.len());
    let mut target = Vec::with_capacity(channels.len());
    for _ in &channels {
        pred.push(Vec::with_capacity(held));
        target.push(Vec::with_capacity(held));
    }
    for p in &passes {
        let y = apply_readout(&readout, &p.held_states)?;
        for r in 0..channels.len() {
            pred[r].extend(y.row(r).iter());
            target[r].extend(p.held_targets.row(r).iter());
        }
    }
    let scores = pred.iter().zip(&target).map(|(p, t)| nrmse(p, t)).collect::<Result<Vec<_>>>()?;
    Ok((MimicUnit { esn, readout, channels }, scores, acc.count(), held))
}

/// Fits reservoir readouts that map raw samples to every channel's trimmed
/// convolution stream.
pub fn train_conv_reservoir(
    clips: &[AudioClip],
    tdfb: &TimeDomainFilterbank,
    cfg: &ExtractorTraining,
) -> Result<(ConvFeatureExtractor, ExtractorTrainingReport)> {
    cfg.validate()?;
    if clips.is_empty() {
        return Err(Error::arg("no training clips"));
    }
    let mut report = ExtractorTrainingReport::default();
    let mut usable = Vec::new();
    for (i, clip) in clips.iter().enumerate() {
        if clip.sample_rate_hz != tdfb.sample_rate_hz {
            return Err(Error::arg(format!(
                "clip at {} Hz, filterbank at {} Hz",
                clip.sample_rate_hz, tdfb.sample_rate_hz
            )));
        }
        if clip.len() < cfg.washout + 2 {
            let name = if clip.source_path.is_empty() { format!("clip {i}") } else { clip.source_path.clone() };
            log::warn!("skipping {name}: {} samples do not cover the {}-sample washout", clip.len(), cfg.washout);
            report.skipped.push(name);
        } else {
            usable.push(clip);
        }
    }
    if usable.is_empty() {
        return Err(Error::NoUsableData("every training clip is shorter than the washout".into()));
    }

    let n_ch = tdfb.n_channels();
    let plan: Vec<(EsnConfig, Vec<usize>)> = match cfg.mode {
        ReadoutMode::Joint => vec![(cfg.esn.clone(), (0..n_ch).collect())],
        ReadoutMode::PerChannel => (0..n_ch)
            .map(|c| {
                let esn = EsnConfig {
                    seed: derive_seed(cfg.esn.seed, c as u64 + 1),
                    ..cfg.esn.clone()
                };
                (esn, vec![c])
            })
            .collect(),
    };
    let mut units = Vec::with_capacity(plan.len());
    let mut training_nrmse = vec![0.0; n_ch];
    for (esn_cfg, channels) in plan {
        let (unit, scores, fit, held) = train_unit(&usable, tdfb, &esn_cfg, channels, cfg)?;
        for (&c, s) in unit.channels.iter().zip(scores) {
            training_nrmse[c] = s;
        }
        report.fit_steps += fit;
        report.heldback_steps += held;
        units.push(unit);
    }
    Ok((
        ConvFeatureExtractor {
            units,
            tdfb: tdfb.clone(),
            training_nrmse,
        },
        report,
    ))
}

impl ConvolutionSource for ConvFeatureExtractor {
    fn n_channels(&self) -> usize {
        self.tdfb.n_channels()
    }

    fn sample_rate_hz(&self) -> u32 {
        self.tdfb.sample_rate_hz
    }

    fn channel_streams(&self, clip: &AudioClip) -> Result<Vec<Vec<f64>>> {
        let mut streams = vec![Vec::new(); self.n_channels()];
        for unit in &self.units {
            let states = unit.esn.collect_states_scalar(&clip.samples)?;
            let y = apply_readout(&unit.readout, &states)?;
            for (r, &c) in unit.channels.iter().enumerate() {
                streams[c] = y.row(r).iter().copied().collect();
            }
        }
        Ok(streams)
    }
}

/// Reservoir-path time-domain features.
pub fn td_mfcc_reservoir(clip: &AudioClip, extractor: &ConvFeatureExtractor, n_frames: usize) -> Result<crate::dsp::FeatureMatrix> {
    super::td_mfcc_with(clip, extractor, n_frames)
}

/// Per-channel NRMSE of `source`'s streams against the exact convolution,
/// pooled over all clips after dropping `washout` samples from each.
pub fn evaluate_mimic(source: &dyn ConvolutionSource, tdfb: &TimeDomainFilterbank, clips: &[AudioClip], washout: usize) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..tdfb.n_channels()).collect();
    let per_clip = clips
        .par_iter()
        .filter(|c| c.len() > washout + 1)
        .map(|clip| Ok((source.channel_streams(clip)?, target_streams(clip, tdfb, &all)?)))
        .collect::<Result<Vec<_>>>()?;
    if per_clip.is_empty() {
        return Err(Error::NoUsableData("no evaluation clip outlasts the washout".into()));
    }
    (0..all.len())
        .map(|c| {
            let (mut p, mut t) = (Vec::new(), Vec::new());
            for (pred, target) in &per_clip {
                p.extend_from_slice(&pred[c][washout..]);
                t.extend(target.row(c).iter().skip(washout));
            }
            nrmse(&p, &t)
        })
        .collect()
}

fn write_channels(w: &mut ByteWriter, channels: &[usize]) {
    w.u64(channels.len() as u64);
    channels.iter().for_each(|&c| w.u64(c as u64));
}

fn read_channels(r: &mut ByteReader<'_>) -> Result<Vec<usize>> {
    let n = r.len()?;
    (0..n).map(|_| r.len()).collect()
}

impl ConvFeatureExtractor {
    /// The first (in joint mode, the only) reservoir.
    pub fn esn(&self) -> &Esn {
        &self.units[0].esn
    }

    pub fn readout(&self) -> &Readout {
        &self.units[0].readout
    }

    /// `EARC` container of the first unit with the filterbank, the channel
    /// map, the training scores and any further units as extension blocks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let first = &self.units[0];
        let mut model = EarcModel::new(first.esn.clone(), Some(first.readout.clone()));

        let mut w = ByteWriter::new();
        w.u32(self.tdfb.sample_rate_hz);
        w.u64(self.tdfb.signal_len as u64);
        w.u64(self.tdfb.n_channels() as u64);
        for ch in &self.tdfb.channels {
            w.u64(ch.pairs.len() as u64);
            for p in &ch.pairs {
                w.f64(p.freq_hz);
                w.f64(p.amplitude);
            }
        }
        model.blocks.push((*TAG_FILTERBANK, w.into_inner()));

        let mut w = ByteWriter::new();
        write_channels(&mut w, &first.channels);
        model.blocks.push((*TAG_CHANNELS, w.into_inner()));

        let mut w = ByteWriter::new();
        w.u64(self.training_nrmse.len() as u64);
        self.training_nrmse.iter().for_each(|&v| w.f64(v));
        model.blocks.push((*TAG_NRMSE, w.into_inner()));

        for unit in &self.units[1..] {
            let mut w = ByteWriter::new();
            write_channels(&mut w, &unit.channels);
            w.bytes(&EarcModel::new(unit.esn.clone(), Some(unit.readout.clone())).to_bytes());
            model.blocks.push((*TAG_UNIT, w.into_inner()));
        }
        model.to_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let model = EarcModel::from_bytes(bytes)?;
        let missing = |t: &[u8; 4]| Error::Container(format!("extractor is missing its {} block", String::from_utf8_lossy(t)));

        let mut r = ByteReader::new(model.block(TAG_FILTERBANK).ok_or_else(|| missing(TAG_FILTERBANK))?);
        let sample_rate_hz = r.u32()?;
        let signal_len = r.len()?;
        let n_ch = r.len()?;
        let mut pairs = Vec::with_capacity(n_ch);
        for _ in 0..n_ch {
            let n = r.len()?;
            pairs.push(
                (0..n)
                    .map(|_| Ok(FilterPair { freq_hz: r.f64()?, amplitude: r.f64()? }))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let tdfb = TimeDomainFilterbank::from_pairs(pairs, sample_rate_hz, signal_len)?;

        let channels = read_channels(&mut ByteReader::new(model.block(TAG_CHANNELS).ok_or_else(|| missing(TAG_CHANNELS))?))?;
        let mut r = ByteReader::new(model.block(TAG_NRMSE).ok_or_else(|| missing(TAG_NRMSE))?);
        let n = r.len()?;
        let training_nrmse = r.f64s(n)?;

        let readout = model.readout.clone().ok_or_else(|| Error::Container("extractor has no readout".into()))?;
        let mut units = vec![MimicUnit { esn: model.esn.clone(), readout, channels }];
        for (tag, payload) in &model.blocks {
            if tag != TAG_UNIT {
                continue;
            }
            let mut r = ByteReader::new(payload);
            let channels = read_channels(&mut r)?;
            let rest = r.take(payload.len() - 8 * (channels.len() + 1))?;
            let inner = EarcModel::from_bytes(rest)?;
            let readout = inner.readout.ok_or_else(|| Error::Container("extractor unit has no readout".into()))?;
            units.push(MimicUnit { esn: inner.esn, readout, channels });
        }

        let mut covered = vec![false; tdfb.n_channels()];
        for u in &units {
            if u.readout.n_outputs() != u.channels.len() || u.esn.input_dim() != 1 {
                return Err(Error::Container("extractor unit shape does not match its channel map".into()));
            }
            for &c in &u.channels {
                match covered.get_mut(c) {
                    Some(slot) if !*slot => *slot = true,
                    _ => return Err(Error::Container(format!("channel {c} is missing from the filterbank or mapped twice"))),
                }
            }
        }
        if covered.iter().any(|c| !c) || training_nrmse.len() != tdfb.n_channels() {
            return Err(Error::Container("extractor does not cover every filterbank channel".into()));
        }
        Ok(Self { units, tdfb, training_nrmse })
    }
}
