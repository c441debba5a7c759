//! Utterance classification with a second reservoir, the cross-validation
//! protocols and their reports.

mod cv;
mod folds;
mod model;
mod report;

pub use cv::{cross_validate, RunRecord, RunStats};
pub use folds::stratified_folds;
pub use model::{encode_targets, predict, train_classifier, ClassifierConfig, ClassifierModel, Prediction, TrainedClassifier};
pub use report::{quantile, summarize, write_confusion_csv, write_report_csv, PhaseSummary, Summary};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Digit,
    Speaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Test on every utterance, training folds included.
    Paper,
    /// Test on the held-out fold only.
    #[default]
    Holdout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Frequency-domain reference MFCCs.
    #[default]
    Exp1,
    /// Time-domain features.
    Exp2,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok(Self::$v),)*
                    other => Err(Error::arg(format!("unknown {} '{other}'", stringify!($t).to_lowercase()))),
                }
            }
        }
    };
}

text_enum!(Task { Digit => "digit", Speaker => "speaker" });
text_enum!(Protocol { Paper => "paper", Holdout => "holdout" });
text_enum!(Experiment { Exp1 => "exp1", Exp2 => "exp2" });

/// One utterance's features and both of its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub id: String,
    pub features: FeatureMatrix,
    pub digit: u8,
    pub speaker: String,
}

impl LabeledFeatures {
    pub fn label(&self, task: Task) -> String {
        match task {
            Task::Digit => self.digit.to_string(),
            Task::Speaker => self.speaker.clone(),
        }
    }
}

/// Sorted distinct labels for `task` and each item's index into them.
pub fn class_indices(data: &[LabeledFeatures], task: Task) -> (Vec<String>, Vec<usize>) {
    let mut labels: Vec<String> = data.iter().map(|d| d.label(task)).collect();
    labels.sort_by(|a, b| natural_cmp(a, b));
    labels.dedup();
    let idx = data
        .iter()
        .map(|d| labels.iter().position(|l| *l == d.label(task)).unwrap())
        .collect();
    (labels, idx)
}

fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub task: Task,
    pub n_folds: usize,
    pub n_seeds: usize,
    pub protocol: Protocol,
    pub classifier: ClassifierConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Exp1,
            task: Task::Digit,
            n_folds: 5,
            n_seeds: 10,
            protocol: Protocol::Holdout,
            classifier: ClassifierConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::arg("n_folds must be at least 2"));
        }
        if self.n_seeds < 1 {
            return Err(Error::arg("n_seeds must be at least 1"));
        }
        self.classifier.validate()
    }
}
