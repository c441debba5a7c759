//! Run configuration: a TOML tree with `schema_version`, overridable from
//! `TDRC_<SECTION>__<KEY>` environment variables and `--set a.b=value`
//! flags (flags win).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdrc_core::audio::NamingScheme;
use tdrc_core::classify::{ClassifierConfig, Experiment, Protocol, Task};
use tdrc_core::dsp::FrameConfig;
use tdrc_core::td::ExtractorTraining;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENV_PREFIX: &str = "TDRC_";

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub global_seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub mel: MelConfig,
    #[serde(default)]
    pub td: TdConfig,
    #[serde(default)]
    pub esn1: ExtractorTraining,
    #[serde(default)]
    pub extractor_subset: ExtractorSubset,
    #[serde(default)]
    pub experiment: ExperimentSettings,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub root: PathBuf,
    pub scheme: NamingScheme,
    /// Empty keeps every speaker.
    #[serde(default)]
    pub speakers: Vec<String>,
    /// Empty keeps every digit.
    #[serde(default)]
    pub digits: Vec<u8>,
    /// Clips kept per (digit, speaker); 0 keeps all.
    #[serde(default)]
    pub max_per_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub n_filters: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub n_coeffs: usize,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_filters: 25,
            fmin_hz: 0.0,
            fmax_hz: 4000.0,
            n_coeffs: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdConfig {
    pub n_channels: usize,
    pub filter_len: usize,
    pub pairs_override: Option<PathBuf>,
    pub log_post_map: bool,
}

impl Default for TdConfig {
    fn default() -> Self {
        Self {
            n_channels: 10,
            filter_len: 200,
            pairs_override: None,
            log_post_map: false,
        }
    }
}

/// Which clips train the convolution reservoir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSubset {
    pub n_clips: usize,
}

impl Default for ExtractorSubset {
    fn default() -> Self {
        Self { n_clips: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub experiments: Vec<Experiment>,
    pub tasks: Vec<Task>,
    pub protocols: Vec<Protocol>,
    pub n_folds: usize,
    pub n_seeds: usize,
    pub classifier: ClassifierConfig,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            experiments: vec![Experiment::Exp1],
            tasks: vec![Task::Digit, Task::Speaker],
            protocols: vec![Protocol::Holdout],
            n_folds: 5,
            n_seeds: 10,
            classifier: ClassifierConfig::default(),
        }
    }
}

fn parse_leaf(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `path` (dot-separated) in `root`, creating tables on the way.
pub fn apply_override(root: &mut toml::Table, path: &str, raw: &str) -> anyhow::Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad(format!("malformed override key '{path}'")));
    }
    let mut table = root;
    for k in &keys[..keys.len() - 1] {
        let slot = table
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
        table = slot
            .as_table_mut()
            .ok_or_else(|| bad(format!("override '{path}': '{k}' is not a table")))?;
    }
    table.insert(keys[keys.len() - 1].to_string(), parse_leaf(raw));
    Ok(())
}

/// `TDRC_EXPERIMENT__N_SEEDS=3` becomes `experiment.n_seeds = 3`.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            (!rest.is_empty()).then(|| (rest.to_lowercase().replace("__", "."), v))
        })
        .collect();
    out.sort();
    out
}

pub fn parse_set(s: &str) -> anyhow::Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| bad(format!("--set expects key.path=value, got '{s}'")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Reads `path`, applies environment then flag overrides, validates, and
    /// resolves relative paths against the config file's directory.
    pub fn load(path: &Path, sets: &[(String, String)]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, &env_overrides(std::env::vars()), sets)
    }

    pub fn from_toml(text: &str, base: &Path, env: &[(String, String)], sets: &[(String, String)]) -> anyhow::Result<Self> {
        let mut tree: toml::Table = text.parse().map_err(|e| bad(format!("config is not valid TOML: {e}")))?;
        for (k, v) in env.iter().chain(sets) {
            apply_override(&mut tree, k, v)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(tree)
            .try_into()
            .map_err(|e| bad(format!("invalid config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        cfg.dataset.root = resolve(&cfg.dataset.root);
        cfg.output_dir = resolve(&cfg.output_dir);
        cfg.td.pairs_override = cfg.td.pairs_override.as_deref().map(resolve);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let ctx = |section: &str, e: tdrc_core::Error| bad(format!("[{section}] {e}"));
        if !self.dataset.root.is_dir() {
            return Err(bad(format!("dataset root {} is not a directory", self.dataset.root.display())));
        }
        if let Some(p) = &self.td.pairs_override {
            if !p.is_file() {
                return Err(bad(format!("pairs override {} does not exist", p.display())));
            }
        }
        self.frame.geometry(tdrc_core::CANONICAL_SAMPLE_RATE_HZ).map_err(|e| ctx("frame", e))?;
        if self.mel.n_coeffs == 0 || self.mel.n_coeffs > self.mel.n_filters {
            return Err(bad("[mel] n_coeffs must lie in 1..=n_filters"));
        }
        if self.td.n_channels == 0 || self.td.filter_len == 0 {
            return Err(bad("[td] n_channels and filter_len must be positive"));
        }
        self.esn1.validate().map_err(|e| ctx("esn1", e))?;
        if self.extractor_subset.n_clips == 0 {
            return Err(bad("[extractor_subset] n_clips must be positive"));
        }
        let x = &self.experiment;
        if x.experiments.is_empty() || x.tasks.is_empty() || x.protocols.is_empty() {
            return Err(bad("[experiment] experiments, tasks and protocols must be non-empty"));
        }
        if x.n_folds < 2 || x.n_seeds < 1 {
            return Err(bad("[experiment] needs n_folds >= 2 and n_seeds >= 1"));
        }
        x.classifier.validate().map_err(|e| ctx("experiment.classifier", e))?;
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the effective config.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(json).iter().map(|b| format!("{b:02x}")).collect()
    }
}
