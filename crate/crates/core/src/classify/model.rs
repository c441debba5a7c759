use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{FeatureMatrix, ZScore};
use crate::esn::{init_reservoir, Esn, EsnConfig, Readout, RidgeAccumulator};
use crate::{Error, Result};

const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// `input_dim` and `seed` are replaced by the feature width and the run
    /// seed.
    pub esn: EsnConfig,
    pub washout: usize,
    pub ridge_lambda: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            esn: EsnConfig::default(),
            washout: 50,
            ridge_lambda: 1e-2,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        self.esn.validate()?;
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::arg("ridge_lambda must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub esn: Esn,
    /// One row per class; carries the feature normalization.
    pub readout: Readout,
    pub class_labels: Vec<String>,
    pub washout: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub model: ClassifierModel,
    /// Positions (in the training list) of utterances too short to use.
    pub skipped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// Readout outputs averaged over the post-washout frames.
    pub scores: DVector<f64>,
}

/// One-hot teacher: row `label_index` is 1 for every step.
pub fn encode_targets(label_index: usize, n_classes: usize, n_steps: usize) -> Result<DMatrix<f64>> {
    if label_index >= n_classes {
        return Err(Error::arg(format!("label {label_index} out of range for {n_classes} classes")));
    }
    if n_steps == 0 {
        return Err(Error::arg("targets need at least one step"));
    }
    let mut t = DMatrix::zeros(n_classes, n_steps);
    t.row_mut(label_index).fill(1.0);
    Ok(t)
}

fn effective_washout(washout: usize, n_frames: usize) -> usize {
    washout.min(n_frames.saturating_sub(1))
}

fn usable_states(esn: &Esn, norm: &ZScore, fm: &FeatureMatrix, washout: usize) -> Result<DMatrix<f64>> {
    let z = norm.apply(fm)?;
    let states = esn.collect_states(&z.values, None)?;
    let w = effective_washout(washout, fm.n_frames());
    Ok(states.columns(w, states.ncols() - w).into_owned())
}

/// Drives a fresh reservoir with each normalized utterance and fits a ridge
/// readout to one-hot targets over the post-washout frames.
pub fn train_classifier(
    examples: &[(&FeatureMatrix, usize)],
    class_labels: Vec<String>,
    cfg: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    let n_classes = class_labels.len();
    if n_classes == 0 {
        return Err(Error::arg("need at least one class"));
    }
    let mut sorted = class_labels.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != n_classes {
        return Err(Error::arg("class labels must be unique"));
    }
    if let Some((_, l)) = examples.iter().find(|(_, l)| *l >= n_classes) {
        return Err(Error::arg(format!("label {l} out of range for {n_classes} classes")));
    }

    let (mut used, mut skipped) = (Vec::new(), Vec::new());
    for (i, ex) in examples.iter().enumerate() {
        if ex.0.n_frames() <= 1 {
            log::warn!("skipping training utterance {i}: {} frame(s)", ex.0.n_frames());
            skipped.push(i);
        } else {
            used.push(*ex);
        }
    }
    if used.is_empty() {
        return Err(Error::NoUsableData("no training utterance has more than one frame".into()));
    }
    let mut present = vec![false; n_classes];
    used.iter().for_each(|(_, l)| present[*l] = true);
    if let Some(c) = present.iter().position(|p| !p) {
        return Err(Error::NoUsableData(format!("class '{}' has no training utterance", class_labels[c])));
    }

    let norm = ZScore::fit(used.iter().map(|(f, _)| *f))?;
    let esn = init_reservoir(&EsnConfig {
        input_dim: norm.dim(),
        seed,
        ..cfg.esn
    })?;
    let n = esn.n_nodes();
    let partials = used
        .par_chunks(CHUNK)
        .map(|chunk| {
            let blocks = chunk
                .iter()
                .map(|(fm, label)| {
                    let s = usable_states(&esn, &norm, fm, cfg.washout)?;
                    let t = encode_targets(*label, n_classes, s.ncols())?;
                    Ok((s, t))
                })
                .collect::<Result<Vec<_>>>()?;
            let cols: usize = blocks.iter().map(|b| b.0.ncols()).sum();
            let (mut s_all, mut t_all) = (DMatrix::zeros(n, cols), DMatrix::zeros(n_classes, cols));
            let mut at = 0;
            for (s, t) in blocks {
                s_all.columns_mut(at, s.ncols()).copy_from(&s);
                t_all.columns_mut(at, t.ncols()).copy_from(&t);
                at += s.ncols();
            }
            let mut acc = RidgeAccumulator::new(n, n_classes);
            acc.add(s_all.as_view(), t_all.as_view())?;
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut acc = RidgeAccumulator::new(n, n_classes);
    partials.iter().for_each(|p| acc.merge(p));
    let mut readout = acc.solve(cfg.ridge_lambda)?;
    readout.input_normalization = Some(norm);
    Ok(TrainedClassifier {
        model: ClassifierModel {
            esn,
            readout,
            class_labels,
            washout: cfg.washout,
        },
        skipped,
    })
}

/// Time-averaged readout output and its argmax (lowest index on ties).
pub fn predict(model: &ClassifierModel, features: &FeatureMatrix) -> Result<Prediction> {
    if features.n_coeffs() != model.esn.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} coefficients, got {}",
            model.esn.input_dim(),
            features.n_coeffs()
        )));
    }
    if features.n_frames() == 0 {
        return Err(Error::arg("cannot classify an utterance with no frames"));
    }
    let norm = model
        .readout
        .input_normalization
        .as_ref()
        .ok_or_else(|| Error::arg("classifier readout carries no feature normalization"))?;
    let states = usable_states(&model.esn, norm, features, model.washout)?;
    let mean_state = states.column_mean();
    let scores = &model.readout.w_out * mean_state + &model.readout.intercept;
    let class = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > scores[best] { i } else { best });
    Ok(Prediction { class, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::CoeffKind;
    use rand::{Rng, SeedableRng};

    fn fm(values: DMatrix<f64>) -> FeatureMatrix {
        FeatureMatrix::with_hop(values, CoeffKind::Mfcc, 0.01).unwrap()
    }

    fn random_fm(seed: u64, coeffs: usize, frames: usize) -> FeatureMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        fm(DMatrix::from_fn(coeffs, frames, |_, _| rng.gen_range(-2.0..2.0)))
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn one_hot() {
        let t = encode_targets(3, 10, 5).unwrap();
        assert_eq!(t.shape(), (10, 5));
        assert!(t.row(3).iter().all(|&v| v == 1.0));
        assert!(t.column_iter().all(|c| c.sum() == 1.0));
        assert_eq!(encode_targets(0, 1, 4).unwrap(), DMatrix::from_element(1, 4, 1.0));
        assert!(encode_targets(10, 10, 5).is_err());
    }

    #[test]
    fn identical_utterances_tie_to_lowest_class() {
        let a = random_fm(1, 4, 20);
        let cfg = ClassifierConfig { esn: EsnConfig { n_nodes: 30, ..EsnConfig::default() }, ..Default::default() };
        let m = train_classifier(&[(&a, 0), (&a, 1)], labels(2), &cfg, 1).unwrap().model;
        let p = predict(&m, &a).unwrap();
        assert!((p.scores[0] - p.scores[1]).abs() < 1e-9, "{:?}", p.scores);
        // Exact ties resolve to class 0.
        let mut tied = m.clone();
        let row = tied.readout.w_out.row(0).into_owned();
        tied.readout.w_out.set_row(1, &row);
        tied.readout.intercept[1] = tied.readout.intercept[0];
        assert_eq!(predict(&tied, &a).unwrap().class, 0);
    }

    #[test]
    fn interpolates_one_utterance_per_class() {
        let data: Vec<FeatureMatrix> = (0..10).map(|i| random_fm(10 + i, 14, 40)).collect();
        let ex: Vec<(&FeatureMatrix, usize)> = data.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let cfg = ClassifierConfig { ridge_lambda: 1e-6, ..Default::default() };
        let a = train_classifier(&ex, labels(10), &cfg, 5).unwrap();
        for (f, l) in &ex {
            assert_eq!(predict(&a.model, f).unwrap().class, *l);
        }
        let b = train_classifier(&ex, labels(10), &cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_and_skips() {
        let one = random_fm(3, 3, 1);
        let many = random_fm(4, 3, 12);
        let cfg = ClassifierConfig { esn: EsnConfig { n_nodes: 20, ..EsnConfig::default() }, ..Default::default() };
        let t = train_classifier(&[(&one, 0), (&many, 0)], labels(1), &cfg, 0).unwrap();
        assert_eq!(t.skipped, vec![0]);
        assert_eq!(predict(&t.model, &random_fm(9, 3, 7)).unwrap().class, 0);
        assert!(predict(&t.model, &random_fm(9, 4, 7)).is_err());
        assert!(train_classifier(&[(&many, 0)], labels(2), &cfg, 0).is_err());
        assert!(train_classifier(&[(&one, 0)], labels(1), &cfg, 0).is_err());
    }
}
