use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use tdrc_core::audio::DatasetManifest;
use tdrc_core::classify::{
    cross_validate, quantile, summarize, write_confusion_csv, write_report_csv, Experiment, ExperimentConfig, LabeledFeatures,
    Summary,
};
use tdrc_core::esn::EarcModel;
use tdrc_core::td::ConvFeatureExtractor;

use crate::config::RunConfig;
use crate::pipeline::{self, FeatureMode};

fn create_dir(p: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn write_file(p: &Path, bytes: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}

fn with_hash(hash: &str, body: Vec<u8>) -> Vec<u8> {
    let mut out = format!("# config_sha256: {hash}\n").into_bytes();
    out.extend(body);
    out
}

fn clip_id(path: &str) -> String {
    path.trim_end_matches(".wav").replace('/', "__")
}

pub fn cmd_manifest(cfg: &RunConfig) -> anyhow::Result<DatasetManifest> {
    let m = pipeline::load_manifest(cfg)?;
    create_dir(&cfg.output_dir)?;
    let mut csv = Vec::new();
    m.write_csv(&mut csv)?;
    write_file(&cfg.output_dir.join("manifest.csv"), with_hash(&cfg.hash(), csv))?;
    write_file(&cfg.output_dir.join("manifest.json"), m.to_json()?)?;
    log::info!("{} clips from {} speakers", m.len(), m.speakers().len());
    Ok(m)
}

/// Writes one `EAFM` file per clip and an index, returning the index path.
pub fn cmd_extract(cfg: &RunConfig, mode: FeatureMode, also_csv: bool) -> anyhow::Result<PathBuf> {
    let manifest = pipeline::load_manifest(cfg)?;
    let extractor = match mode {
        FeatureMode::TdReservoir => Some(pipeline::load_extractor(cfg)?.ok_or_else(|| {
            tdrc_core::Error::NoUsableData(format!(
                "no extractor at {}; run `tdrc train-extractor` with this config first",
                pipeline::extractor_path(cfg).display()
            ))
        })?),
        _ => None,
    };
    let clips = pipeline::load_clips(&manifest)?;
    let feats = pipeline::features(cfg, &clips, mode, extractor.as_ref())?;
    let dir = cfg.output_dir.join("features").join(mode.dir_name());
    create_dir(&dir)?;
    let mut index = csv::Writer::from_writer(Vec::new());
    index.write_record(["id", "digit", "speaker", "n_coeffs", "n_frames", "file"])?;
    for (e, fm) in manifest.entries.iter().zip(&feats) {
        let id = clip_id(&e.path);
        let file = format!("{id}.eafm");
        write_file(&dir.join(&file), fm.to_binary())?;
        if also_csv {
            let mut buf = Vec::new();
            fm.write_csv(&mut buf)?;
            write_file(&dir.join(format!("{id}.csv")), buf)?;
        }
        index.write_record([id, e.digit.to_string(), e.speaker.clone(), fm.n_coeffs().to_string(), fm.n_frames().to_string(), file])?;
    }
    let path = dir.join("index.csv");
    write_file(&path, with_hash(&cfg.hash(), index.into_inner()?))?;
    log::info!("wrote {} {} feature files to {}", feats.len(), mode.dir_name(), dir.display());
    Ok(path)
}

#[derive(Serialize)]
struct ExtractorMetrics<'a> {
    config_sha256: String,
    global_seed: u64,
    n_nodes: usize,
    training_clips: &'a [String],
    skipped: &'a [String],
    fit_steps: usize,
    heldback_steps: usize,
    training_nrmse: &'a [f64],
    median_nrmse: f64,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

pub fn cmd_train_extractor(cfg: &RunConfig) -> anyhow::Result<ConvFeatureExtractor> {
    let manifest = pipeline::load_manifest(cfg)?;
    let clips = pipeline::load_clips(&manifest)?;
    let trained = pipeline::train_extractor(cfg, &clips)?;
    save_extractor(cfg, &trained)?;
    Ok(trained.extractor)
}

fn save_extractor(cfg: &RunConfig, t: &pipeline::TrainedExtractor) -> anyhow::Result<()> {
    create_dir(&cfg.output_dir)?;
    let bytes = t.extractor.to_bytes();
    write_file(&pipeline::extractor_path(cfg), &bytes)?;
    write_file(&cfg.output_dir.join("extractor.json"), EarcModel::from_bytes(&bytes)?.config_json()?)?;
    let metrics = ExtractorMetrics {
        config_sha256: cfg.hash(),
        global_seed: cfg.global_seed,
        n_nodes: t.extractor.esn().n_nodes(),
        training_clips: &t.training_clips,
        skipped: &t.report.skipped,
        fit_steps: t.report.fit_steps,
        heldback_steps: t.report.heldback_steps,
        training_nrmse: &t.extractor.training_nrmse,
        median_nrmse: median(&t.extractor.training_nrmse),
    };
    write_file(&cfg.output_dir.join("extractor_metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    log::info!("extractor trained, median held-back NRMSE {:.4}", metrics.median_nrmse);
    Ok(())
}

#[derive(Serialize)]
struct Reproducibility {
    config_sha256: String,
    global_seed: u64,
    reservoir_seeds: Vec<u64>,
    version: &'static str,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    summary: &'a Summary,
    reproducibility: Reproducibility,
}

/// Runs every configured (experiment, task, protocol) combination and
/// returns the report CSV paths in run order.
pub fn cmd_run_experiment(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    let manifest = pipeline::load_manifest(cfg)?;
    let clips = pipeline::load_clips(&manifest)?;
    let reports = cfg.output_dir.join("reports");
    let confusion_dir = reports.join("confusion");
    create_dir(&confusion_dir)?;
    let hash = cfg.hash();
    let x = &cfg.experiment;
    let mut written = Vec::new();
    let mut folds_written = false;

    for &experiment in &x.experiments {
        let feats = match experiment {
            Experiment::Exp1 => pipeline::features(cfg, &clips, FeatureMode::Reference, None)?,
            Experiment::Exp2 => {
                let extractor = match pipeline::load_extractor(cfg)? {
                    Some(e) => e,
                    None => {
                        log::info!("no extractor found; training one");
                        let t = pipeline::train_extractor(cfg, &clips)?;
                        save_extractor(cfg, &t)?;
                        t.extractor
                    }
                };
                pipeline::features(cfg, &clips, FeatureMode::TdReservoir, Some(&extractor))?
            }
        };
        let data: Vec<LabeledFeatures> = manifest
            .entries
            .iter()
            .zip(feats)
            .map(|(e, features)| LabeledFeatures {
                id: clip_id(&e.path),
                features,
                digit: e.digit,
                speaker: e.speaker.clone(),
            })
            .collect();

        for &task in &x.tasks {
            for &protocol in &x.protocols {
                let ecfg = ExperimentConfig {
                    experiment,
                    task,
                    n_folds: x.n_folds,
                    n_seeds: x.n_seeds,
                    protocol,
                    classifier: x.classifier.clone(),
                };
                let stats = cross_validate(&data, &ecfg, cfg.global_seed)?;
                let name = format!("{experiment}_{task}_{protocol}");
                if !folds_written {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["id", "digit", "speaker", "fold"])?;
                    for (d, f) in data.iter().zip(&stats.folds) {
                        w.write_record([d.id.clone(), d.digit.to_string(), d.speaker.clone(), f.to_string()])?;
                    }
                    write_file(&reports.join("folds.csv"), with_hash(&hash, w.into_inner()?))?;
                    folds_written = true;
                }
                let mut csv = Vec::new();
                write_report_csv(&stats, Some(&hash), &mut csv)?;
                let csv_path = reports.join(format!("{name}.csv"));
                write_file(&csv_path, csv)?;
                let summary = summarize(&stats)?;
                let mut seeds: Vec<u64> = stats.records.iter().map(|r| r.reservoir_seed).collect();
                seeds.dedup();
                let json = ReportJson {
                    summary: &summary,
                    reproducibility: Reproducibility {
                        config_sha256: hash.clone(),
                        global_seed: cfg.global_seed,
                        reservoir_seeds: seeds,
                        version: env!("CARGO_PKG_VERSION"),
                    },
                };
                write_file(&reports.join(format!("{name}.json")), serde_json::to_string_pretty(&json)?)?;
                for r in &stats.records {
                    let mut buf = Vec::new();
                    write_confusion_csv(&r.confusion, &stats.class_labels, &mut buf)?;
                    write_file(
                        &confusion_dir.join(format!("{name}_s{}_f{}.csv", r.seed, r.fold)),
                        with_hash(&hash, buf),
                    )?;
                }
                log::info!(
                    "{name}: test median {:.2}% (train median {:.2}%) over {} runs",
                    summary.test.median,
                    summary.train.median,
                    summary.n_runs
                );
                written.push(csv_path);
            }
        }
    }
    Ok(written)
}

/// Five-number summaries of every report CSV under `<output_dir>/reports`
/// (or the given files), written to `summary.csv` and returned as text.
pub fn cmd_report(cfg: &RunConfig, files: &[PathBuf]) -> anyhow::Result<String> {
    let dir = cfg.output_dir.join("reports");
    let files: Vec<PathBuf> = if files.is_empty() {
        let mut v: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("listing {}; run `tdrc run-experiment` first", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv") && p.file_name().is_some_and(|n| n != "folds.csv" && n != "summary.csv"))
            .collect();
        v.sort();
        v
    } else {
        files.to_vec()
    };
    let mut groups: BTreeMap<(String, String, String, String), Vec<f64>> = BTreeMap::new();
    for f in &files {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(f)
            .with_context(|| format!("opening {}", f.display()))?;
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or_default().to_string();
            let acc: f64 = field(6)
                .parse()
                .map_err(|_| tdrc_core::Error::Format { path: f.clone(), reason: "accuracy_pct is not a number".into() })?;
            groups.entry((field(0), field(1), field(2), field(5))).or_default().push(acc);
        }
    }
    if groups.is_empty() {
        return Err(tdrc_core::Error::NoUsableData("no report rows found".into()).into());
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["experiment", "task", "protocol", "phase", "n", "min", "q1", "median", "q3", "max", "mean"])?;
    for ((e, t, p, ph), mut v) in groups {
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let mut row = vec![e, t, p, ph, v.len().to_string()];
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            row.push(format!("{:.4}", quantile(&v, q)));
        }
        row.push(format!("{mean:.4}"));
        out.write_record(row)?;
    }
    let text = String::from_utf8(out.into_inner()?)?;
    create_dir(&dir)?;
    write_file(&dir.join("summary.csv"), with_hash(&cfg.hash(), text.clone().into_bytes()))?;
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(text)
}

