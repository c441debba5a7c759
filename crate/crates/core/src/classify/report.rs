use std::io::Write;

use serde::Serialize;

use super::{Experiment, Protocol, RunStats, Task};
use crate::{Error, Result};

/// Linear-interpolation quantile of sorted data (position `q * (n - 1)`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, frac) = (pos.floor() as usize, pos.fract());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl PhaseSummary {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub task: Task,
    pub protocol: Protocol,
    pub n_runs: usize,
    pub train: PhaseSummary,
    pub test: PhaseSummary,
}

pub fn summarize(stats: &RunStats) -> Result<Summary> {
    if stats.records.is_empty() {
        return Err(Error::NoUsableData("no runs to summarize".into()));
    }
    Ok(Summary {
        experiment: stats.experiment,
        task: stats.task,
        protocol: stats.protocol,
        n_runs: stats.records.len(),
        train: PhaseSummary::of(stats.records.iter().map(|r| r.train_accuracy)),
        test: PhaseSummary::of(stats.records.iter().map(|r| r.test_accuracy)),
    })
}

/// `experiment,task,protocol,seed,fold,phase,accuracy_pct`, two rows per
/// run, preceded by a `# config_sha256:` comment when a hash is given.
pub fn write_report_csv<W: Write>(stats: &RunStats, config_hash: Option<&str>, mut w: W) -> Result<()> {
    let io = |e: std::io::Error| Error::io("<report>", e);
    if let Some(h) = config_hash {
        writeln!(w, "# config_sha256: {h}").map_err(io)?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["experiment", "task", "protocol", "seed", "fold", "phase", "accuracy_pct"])?;
    for r in &stats.records {
        for (phase, acc) in [("train", r.train_accuracy), ("test", r.test_accuracy)] {
            out.write_record([
                stats.experiment.to_string(),
                stats.task.to_string(),
                stats.protocol.to_string(),
                r.seed.to_string(),
                r.fold.to_string(),
                phase.to_string(),
                format!("{acc:.4}"),
            ])?;
        }
    }
    out.flush().map_err(io)?;
    Ok(())
}

/// `true,predicted,count` for every cell of the matrix.
pub fn write_confusion_csv<W: Write>(confusion: &[Vec<usize>], labels: &[String], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["true", "predicted", "count"])?;
    for (t, row) in confusion.iter().enumerate() {
        for (p, n) in row.iter().enumerate() {
            out.write_record([labels[t].as_str(), labels[p].as_str(), &n.to_string()])?;
        }
    }
    out.flush().map_err(|e| Error::io("<confusion>", e))?;
    Ok(())
}
