use rayon::prelude::*;
use serde::Serialize;

use super::{class_indices, predict, stratified_folds, train_classifier, ClassifierModel, Experiment, ExperimentConfig, LabeledFeatures, Protocol, Task};
use crate::dsp::FeatureMatrix;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Stream used to derive the fold-assignment seed from the global seed.
pub const FOLD_STREAM: u64 = 0xF01D;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: usize,
    pub fold: usize,
    pub reservoir_seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// `confusion[true][predicted]` over the test utterances.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub experiment: Experiment,
    pub task: Task,
    pub protocol: Protocol,
    pub class_labels: Vec<String>,
    pub folds: Vec<usize>,
    pub records: Vec<RunRecord>,
}

fn evaluate(model: &ClassifierModel, items: &[(&FeatureMatrix, usize)]) -> Result<(f64, Vec<Vec<usize>>)> {
    let k = model.class_labels.len();
    let mut confusion = vec![vec![0; k]; k];
    let preds = items
        .par_iter()
        .map(|(f, _)| predict(model, f).map(|p| p.class))
        .collect::<Result<Vec<_>>>()?;
    let mut correct = 0;
    for ((_, truth), p) in items.iter().zip(preds) {
        confusion[*truth][p] += 1;
        correct += usize::from(*truth == p);
    }
    Ok((100.0 * correct as f64 / items.len().max(1) as f64, confusion))
}

/// Leave-one-fold-out training repeated over `n_seeds` reservoir seeds.
///
/// Folds depend only on `global_seed`, so every experiment and task run on
/// the same data shares them. Seed index `s` draws its reservoir from
/// `derive_seed(global_seed, s)`.
pub fn cross_validate(data: &[LabeledFeatures], cfg: &ExperimentConfig, global_seed: u64) -> Result<RunStats> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::NoUsableData("empty dataset".into()));
    }
    let keys: Vec<(u8, String)> = data.iter().map(|d| (d.digit, d.speaker.clone())).collect();
    let folds = stratified_folds(&keys, cfg.n_folds, derive_seed(global_seed, FOLD_STREAM))?;
    let (class_labels, labels) = class_indices(data, cfg.task);
    let items: Vec<(&FeatureMatrix, usize)> = data.iter().map(|d| &d.features).zip(labels).collect();

    let runs: Vec<(usize, usize)> = (0..cfg.n_seeds).flat_map(|s| (0..cfg.n_folds).map(move |f| (s, f))).collect();
    let records = runs
        .par_iter()
        .map(|&(s, f)| {
            let pick = |keep: &dyn Fn(usize) -> bool| -> Vec<(&FeatureMatrix, usize)> {
                items.iter().zip(&folds).filter(|(_, &k)| keep(k)).map(|(x, _)| *x).collect()
            };
            let train = pick(&|k| k != f);
            let test = match cfg.protocol {
                Protocol::Paper => items.clone(),
                Protocol::Holdout => pick(&|k| k == f),
            };
            let reservoir_seed = derive_seed(global_seed, s as u64);
            let model = train_classifier(&train, class_labels.clone(), &cfg.classifier, reservoir_seed)
                .map_err(|e| Error::arg(format!("seed {s}, fold {f}: {e}")))?
                .model;
            let (train_accuracy, _) = evaluate(&model, &train)?;
            let (test_accuracy, confusion) = evaluate(&model, &test)?;
            Ok(RunRecord {
                seed: s,
                fold: f,
                reservoir_seed,
                train_accuracy,
                test_accuracy,
                confusion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunStats {
        experiment: cfg.experiment,
        task: cfg.task,
        protocol: cfg.protocol,
        class_labels,
        folds,
        records,
    })
}
