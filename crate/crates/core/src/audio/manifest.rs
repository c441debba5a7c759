//! Corpus catalogues.
//!
//! Both supported corpora name files `<digit>_<speaker>_<index>.wav`. They
//! differ in the speaker token: Audio-MNIST uses zero-padded numeric ids in
//! per-speaker folders, FSDD uses lowercase speaker names in a flat folder.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamingScheme {
    AudioMnist,
    Fsdd,
}

impl NamingScheme {
    pub fn corpus_name(self) -> &'static str {
        match self {
            NamingScheme::AudioMnist => "audio_mnist",
            NamingScheme::Fsdd => "fsdd",
        }
    }

    pub fn native_rate_hz(self) -> u32 {
        match self {
            NamingScheme::AudioMnist => 48000,
            NamingScheme::Fsdd => 8000,
        }
    }

    /// Parses a file name into `(digit, speaker)`.
    pub fn parse(self, file_name: &str) -> Option<(u8, String)> {
        let stem = file_name.strip_suffix(".wav")?;
        let mut parts = stem.split('_');
        let (digit, speaker, index) = (parts.next()?, parts.next()?, parts.next()?);
        if parts.next().is_some() || index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let digit = match digit.as_bytes() {
            [d @ b'0'..=b'9'] => d - b'0',
            _ => return None,
        };
        let speaker_ok = !speaker.is_empty()
            && match self {
                NamingScheme::AudioMnist => speaker.bytes().all(|b| b.is_ascii_digit()),
                NamingScheme::Fsdd => {
                    speaker.bytes().all(|b| b.is_ascii_alphanumeric())
                        && !speaker.bytes().all(|b| b.is_ascii_digit())
                }
            };
        speaker_ok.then(|| (digit, speaker.to_owned()))
    }
}

impl std::str::FromStr for NamingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "audio_mnist" | "audio-mnist" => Ok(NamingScheme::AudioMnist),
            "fsdd" => Ok(NamingScheme::Fsdd),
            other => Err(Error::arg(format!("unknown naming scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest root, `/`-separated.
    pub path: String,
    pub digit: u8,
    pub speaker: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub corpus_name: String,
    pub sample_rate_hz: u32,
    #[serde(skip)]
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    /// Files with a `.wav` extension whose names did not parse.
    pub warnings: Vec<String>,
}

/// Walks `root_dir` recursively and catalogues every `.wav` file whose name
/// follows `scheme`. Entries are sorted by relative path; non-matching WAV
/// files are reported in `warnings`.
pub fn build_manifest(root_dir: &Path, scheme: NamingScheme) -> Result<DatasetManifest> {
    let mut files = Vec::new();
    collect_wavs(root_dir, &mut files)?;
    files.sort();

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for file in files {
        let rel = relative_path(root_dir, &file);
        let name = file.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        match scheme.parse(name) {
            Some((digit, speaker)) => entries.push(ManifestEntry { path: rel, digit, speaker }),
            None => warnings.push(format!(
                "{rel}: name does not follow the {} scheme",
                scheme.corpus_name()
            )),
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root_dir.into()));
    }
    entries.sort();
    Ok(DatasetManifest {
        corpus_name: scheme.corpus_name().to_owned(),
        sample_rate_hz: scheme.native_rate_hz(),
        root: root_dir.into(),
        entries,
        warnings,
    })
}

fn collect_wavs(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let read = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for item in read {
        let item = item.map_err(|e| Error::io(dir, e))?;
        let path = item.path();
        let ty = item.file_type().map_err(|e| Error::io(&path, e))?;
        if ty.is_dir() {
            collect_wavs(&path, out)?;
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_path(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn absolute_path(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn speakers(&self) -> Vec<String> {
        let mut s: Vec<String> = self.entries.iter().map(|e| e.speaker.clone()).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Keeps entries whose speaker and digit are in the given sets (empty set
    /// means no restriction), and at most `max_per_group` entries per
    /// `(digit, speaker)` pair in path order (0 means unlimited).
    pub fn subset(&self, speakers: &[String], digits: &[u8], max_per_group: usize) -> DatasetManifest {
        let mut counts = std::collections::BTreeMap::<(u8, &str), usize>::new();
        let entries = self
            .entries
            .iter()
            .filter(|e| speakers.is_empty() || speakers.contains(&e.speaker))
            .filter(|e| digits.is_empty() || digits.contains(&e.digit))
            .filter(|e| {
                let c = counts.entry((e.digit, e.speaker.as_str())).or_default();
                *c += 1;
                max_per_group == 0 || *c <= max_per_group
            })
            .cloned()
            .collect();
        DatasetManifest {
            entries,
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["path", "digit", "speaker"])?;
        for e in &self.entries {
            w.write_record([e.path.as_str(), &e.digit.to_string(), e.speaker.as_str()])?;
        }
        w.flush().map_err(|e| Error::io("<manifest csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
