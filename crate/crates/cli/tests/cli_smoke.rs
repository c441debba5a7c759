use std::fs;
use std::path::Path;
use std::time::Instant;

use tdrc_cli::commands::{cmd_extract, cmd_manifest, cmd_report, cmd_run_experiment, cmd_train_extractor};
use tdrc_cli::{exit_code, FeatureMode, RunConfig};

fn smoke_config(dir: &Path, extra: &str) -> RunConfig {
    let utts = tdrc_testkit::corpus(2, &[3, 7], 5, 11);
    tdrc_testkit::write_corpus(&dir.join("wav"), &utts).unwrap();
    let text = format!(
        r#"schema_version = 1
global_seed = 5
output_dir = "out"

[dataset]
root = "wav"
scheme = "fsdd"

[extractor_subset]
n_clips = 6

[experiment]
experiments = ["exp1", "exp2"]
tasks = ["digit"]
protocols = ["holdout"]
n_seeds = 2
{extra}
"#
    );
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    RunConfig::load(&path, &[]).unwrap()
}

fn index_ids(path: &Path) -> Vec<(String, usize)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    r.records().map(|r| { let r = r.unwrap(); (r[0].to_string(), r[4].parse().unwrap()) }).collect()
}

#[test]
fn end_to_end_smoke() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config(dir.path(), "");

    let m = cmd_manifest(&cfg).unwrap();
    assert_eq!(m.len(), 20);
    assert!(cfg.output_dir.join("manifest.csv").exists());

    let reference = index_ids(&cmd_extract(&cfg, FeatureMode::Reference, true).unwrap());
    let direct = index_ids(&cmd_extract(&cfg, FeatureMode::TdDirect, false).unwrap());
    assert_eq!(reference.len(), 20);
    assert_eq!(reference, direct);
    let first = fs::read(cfg.output_dir.join("features/reference").join(format!("{}.eafm", reference[0].0))).unwrap();
    let fm = tdrc_core::dsp::FeatureMatrix::from_binary(&first, tdrc_core::dsp::CoeffKind::Mfcc, 0.01).unwrap();
    assert_eq!(fm.n_coeffs(), 14);

    let err = cmd_extract(&cfg, FeatureMode::TdReservoir, false).unwrap_err();
    assert!(format!("{err:#}").contains("train-extractor"));
    assert_eq!(exit_code(&err), 3);

    cmd_train_extractor(&cfg).unwrap();
    let a = fs::read(cfg.output_dir.join("extractor.earc")).unwrap();
    cmd_train_extractor(&cfg).unwrap();
    assert_eq!(a, fs::read(cfg.output_dir.join("extractor.earc")).unwrap());
    let metrics: serde_json::Value = serde_json::from_slice(&fs::read(cfg.output_dir.join("extractor_metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["training_nrmse"].as_array().unwrap().len(), 10);
    assert_eq!(metrics["training_clips"].as_array().unwrap().len(), 6);
    let reservoir = index_ids(&cmd_extract(&cfg, FeatureMode::TdReservoir, false).unwrap());
    assert_eq!(reservoir, reference);

    let reports = cmd_run_experiment(&cfg).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        let text = fs::read_to_string(r).unwrap();
        assert!(text.starts_with(&format!("# config_sha256: {}", cfg.hash())));
        assert_eq!(text.lines().count(), 2 + 2 * 2 * 5);
    }
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(cfg.output_dir.join("reports/exp1_digit_holdout.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["n_runs"], 10);
    assert!(cfg.output_dir.join("reports/confusion/exp2_digit_holdout_s1_f4.csv").exists());

    let summary = cmd_report(&cfg, &[]).unwrap();
    assert!(summary.contains("exp2,digit,holdout,test,10,"));
    assert!(start.elapsed().as_secs() < 60, "{:?}", start.elapsed());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "schema_version = 9\n[dataset]\nroot='.'\nscheme='fsdd'\n").unwrap();
    let err = RunConfig::load(&dir.path().join("bad.toml"), &[]).unwrap_err();
    assert_eq!(exit_code(&err), 2);

    let cfg = smoke_config(dir.path(), "");
    fs::create_dir_all(dir.path().join("empty")).unwrap();
    let empty = RunConfig { dataset: tdrc_cli::config::DatasetConfig { root: dir.path().join("empty"), ..cfg.dataset.clone() }, ..cfg.clone() };
    assert_eq!(exit_code(&cmd_manifest(&empty).unwrap_err()), 3);

    let stiff = RunConfig { experiment: tdrc_cli::config::ExperimentSettings { n_folds: 11, ..cfg.experiment.clone() }, ..cfg };
    assert_eq!(exit_code(&cmd_run_experiment(&stiff).unwrap_err()), 3);
}
