//! Shared steps behind the subcommands: loading the configured subset,
//! building filterbanks and computing features.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tdrc_core::audio::{build_manifest, load_labelled, AudioClip, DatasetManifest};
use tdrc_core::dsp::{make_mel_filterbank, mfcc, FeatureMatrix, MelFilterbank};
use tdrc_core::rng::{derive_seed, rng_from_seed};
use tdrc_core::td::{
    log_compress, read_pairs_override, td_mfcc_direct, td_mfcc_reservoir, train_conv_reservoir, ConvFeatureExtractor,
    ExtractorTrainingReport, TimeDomainFilterbank,
};
use tdrc_core::CANONICAL_SAMPLE_RATE_HZ;

use crate::config::RunConfig;

/// Stream for choosing the extractor's training clips.
const EXTRACTOR_STREAM: u64 = 0xE1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Reference,
    TdDirect,
    TdReservoir,
}

impl FeatureMode {
    pub fn dir_name(self) -> &'static str {
        match self {
            FeatureMode::Reference => "reference",
            FeatureMode::TdDirect => "td_direct",
            FeatureMode::TdReservoir => "td_reservoir",
        }
    }
}

pub fn load_manifest(cfg: &RunConfig) -> anyhow::Result<DatasetManifest> {
    let d = &cfg.dataset;
    let m = build_manifest(&d.root, d.scheme)?.subset(&d.speakers, &d.digits, d.max_per_group);
    for w in &m.warnings {
        log::warn!("{w}");
    }
    if m.is_empty() {
        return Err(tdrc_core::Error::EmptyDataset(d.root.clone()).into());
    }
    Ok(m)
}

/// Clips of the manifest in manifest order, resampled to the canonical rate.
pub fn load_clips(manifest: &DatasetManifest) -> anyhow::Result<Vec<AudioClip>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let clip = load_labelled(&manifest.absolute_path(e), Some(e.digit), Some(&e.speaker), CANONICAL_SAMPLE_RATE_HZ)?;
            Ok(clip.with_source(e.path.clone()))
        })
        .collect()
}

pub fn reference_bank(cfg: &RunConfig) -> anyhow::Result<MelFilterbank> {
    let m = &cfg.mel;
    Ok(make_mel_filterbank(m.n_filters, cfg.frame.n_fft, m.fmin_hz, m.fmax_hz, CANONICAL_SAMPLE_RATE_HZ)?)
}

pub fn td_bank(cfg: &RunConfig) -> anyhow::Result<TimeDomainFilterbank> {
    let fb = make_mel_filterbank(cfg.td.n_channels, cfg.frame.n_fft, cfg.mel.fmin_hz, cfg.mel.fmax_hz, CANONICAL_SAMPLE_RATE_HZ)?;
    let mut tdfb = TimeDomainFilterbank::from_mel(&fb, cfg.td.filter_len)?;
    if let Some(p) = &cfg.td.pairs_override {
        let file = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
        tdfb = tdfb.with_overrides(&read_pairs_override(file)?)?;
    }
    Ok(tdfb)
}

/// Features for every clip, all paths producing the reference frame count.
pub fn features(
    cfg: &RunConfig,
    clips: &[AudioClip],
    mode: FeatureMode,
    extractor: Option<&ConvFeatureExtractor>,
) -> anyhow::Result<Vec<FeatureMatrix>> {
    let fb = reference_bank(cfg)?;
    let tdfb = match mode {
        FeatureMode::TdDirect => Some(td_bank(cfg)?),
        _ => None,
    };
    if mode == FeatureMode::TdReservoir && extractor.is_none() {
        anyhow::bail!("reservoir features need a trained extractor");
    }
    clips
        .par_iter()
        .map(|clip| {
            let n_frames = cfg.frame.frames_for(clip.len(), clip.sample_rate_hz)?;
            let fm = match mode {
                FeatureMode::Reference => return Ok(mfcc(clip, &cfg.frame, &fb, cfg.mel.n_coeffs)?),
                FeatureMode::TdDirect => td_mfcc_direct(clip, tdfb.as_ref().unwrap(), n_frames)?,
                FeatureMode::TdReservoir => td_mfcc_reservoir(clip, extractor.unwrap(), n_frames)?,
            };
            Ok(if cfg.td.log_post_map { log_compress(&fm) } else { fm })
        })
        .collect()
}

/// Indices (ascending) of the clips that train the extractor.
pub fn extractor_selection(cfg: &RunConfig, n_available: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_available).collect();
    idx.shuffle(&mut rng_from_seed(derive_seed(cfg.global_seed, EXTRACTOR_STREAM)));
    idx.truncate(cfg.extractor_subset.n_clips.min(n_available));
    idx.sort_unstable();
    idx
}

pub struct TrainedExtractor {
    pub extractor: ConvFeatureExtractor,
    pub report: ExtractorTrainingReport,
    pub training_clips: Vec<String>,
}

pub fn train_extractor(cfg: &RunConfig, clips: &[AudioClip]) -> anyhow::Result<TrainedExtractor> {
    let chosen: Vec<AudioClip> = extractor_selection(cfg, clips.len()).into_iter().map(|i| clips[i].clone()).collect();
    let tdfb = td_bank(cfg)?;
    let mut esn1 = cfg.esn1.clone();
    esn1.esn.seed = derive_seed(cfg.global_seed, EXTRACTOR_STREAM + 1);
    let (extractor, report) = train_conv_reservoir(&chosen, &tdfb, &esn1)?;
    Ok(TrainedExtractor {
        extractor,
        report,
        training_clips: chosen.iter().map(|c| c.source_path.clone()).collect(),
    })
}

pub fn extractor_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("extractor.earc")
}

pub fn load_extractor(cfg: &RunConfig) -> anyhow::Result<Option<ConvFeatureExtractor>> {
    let p = extractor_path(cfg);
    if !p.exists() {
        return Ok(None);
    }
    let bytes = fs::read(&p).with_context(|| format!("reading {}", p.display()))?;
    Ok(Some(ConvFeatureExtractor::from_bytes(&bytes)?))
}
