use nalgebra::DMatrix;
use tdrc_core::audio::AudioClip;
use tdrc_core::classify::{cross_validate, summarize, Experiment, ExperimentConfig, LabeledFeatures, Protocol, Task};
use tdrc_core::dsp::{make_mel_filterbank, mfcc, CoeffKind, FeatureMatrix, FrameConfig};
use tdrc_core::esn::EsnConfig;
use tdrc_core::td::{td_mfcc_direct, TimeDomainFilterbank};

fn small(cfg: ExperimentConfig) -> ExperimentConfig {
    let mut cfg = cfg;
    cfg.classifier.esn = EsnConfig { n_nodes: 120, ..EsnConfig::default() };
    cfg
}

#[test]
fn label_features_classify_perfectly() {
    let mut data = Vec::new();
    for d in 0..4u8 {
        for s in ["x", "y"] {
            for k in 0..5 {
                let mut v = DMatrix::from_element(4, 12, -1.0);
                v.row_mut(d as usize).fill(1.0);
                v[(0, 0)] += k as f64 * 1e-3;
                data.push(LabeledFeatures {
                    id: format!("{d}_{s}_{k}"),
                    features: FeatureMatrix::with_hop(v, CoeffKind::Mfcc, 0.01).unwrap(),
                    digit: d,
                    speaker: s.into(),
                });
            }
        }
    }
    for protocol in [Protocol::Paper, Protocol::Holdout] {
        let cfg = small(ExperimentConfig { protocol, n_seeds: 10, ..ExperimentConfig::default() });
        let stats = cross_validate(&data, &cfg, 9).unwrap();
        assert_eq!(stats.records.len(), 50);
        assert!(stats.records.iter().all(|r| r.train_accuracy == 100.0 && r.test_accuracy == 100.0));
    }
}

#[test]
fn paper_protocol_is_optimistic_and_folds_are_shared() {
    let utts = tdrc_testkit::corpus(4, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9], 5, 19);
    let frame = FrameConfig::default();
    let fb = make_mel_filterbank(25, 1024, 0.0, 4000.0, 8000).unwrap();
    let tdfb = TimeDomainFilterbank::from_mel(&make_mel_filterbank(10, 1024, 0.0, 4000.0, 8000).unwrap(), 200).unwrap();
    let (mut exp1, mut exp2) = (Vec::new(), Vec::new());
    for u in &utts {
        let clip = AudioClip::new(u.samples.clone(), 8000).unwrap();
        let m = mfcc(&clip, &frame, &fb, 14).unwrap();
        let t = td_mfcc_direct(&clip, &tdfb, m.n_frames()).unwrap();
        let wrap = |features| LabeledFeatures { id: u.file_name(), features, digit: u.digit, speaker: u.speaker.clone() };
        exp1.push(wrap(m));
        exp2.push(wrap(t));
    }
    let base = small(ExperimentConfig { n_seeds: 2, task: Task::Digit, ..ExperimentConfig::default() });
    let holdout = cross_validate(&exp1, &ExperimentConfig { protocol: Protocol::Holdout, ..base.clone() }, 3).unwrap();
    let paper = cross_validate(&exp1, &ExperimentConfig { protocol: Protocol::Paper, ..base.clone() }, 3).unwrap();
    let (h, p) = (summarize(&holdout).unwrap(), summarize(&paper).unwrap());
    assert!(p.test.median >= h.test.median, "paper {} < holdout {}", p.test.median, h.test.median);
    assert!(h.test.median > 50.0, "{}", h.test.median);

    let e2 = cross_validate(&exp2, &ExperimentConfig { experiment: Experiment::Exp2, protocol: Protocol::Holdout, ..base }, 3).unwrap();
    assert_eq!(e2.folds, holdout.folds);
    let seeds = |s: &tdrc_core::classify::RunStats| s.records.iter().map(|r| r.reservoir_seed).collect::<Vec<_>>();
    assert_eq!(seeds(&e2), seeds(&holdout));
}
