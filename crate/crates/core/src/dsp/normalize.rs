use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::{Error, Result};

/// Per-coefficient standardization fitted over every frame of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    /// Coefficients with zero spread get unit scale so they map to zero.
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a FeatureMatrix>) -> Result<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sum_sq: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for fm in features {
            if sum.is_empty() {
                sum = vec![0.0; fm.n_coeffs()];
                sum_sq = vec![0.0; fm.n_coeffs()];
            } else if fm.n_coeffs() != sum.len() {
                return Err(Error::DimensionMismatch(format!(
                    "mixed coefficient counts {} and {}",
                    sum.len(),
                    fm.n_coeffs()
                )));
            }
            for col in fm.values.column_iter() {
                for (i, &v) in col.iter().enumerate() {
                    sum[i] += v;
                    sum_sq[i] += v * v;
                }
            }
            count += fm.n_frames();
        }
        if count == 0 {
            return Err(Error::NoUsableData("no frames to fit normalization".into()));
        }
        let n = count as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                let var = (sq / n - m * m).max(0.0);
                if var.sqrt() > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        if fm.n_coeffs() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "normalizer has {} coefficients, features have {}",
                self.dim(),
                fm.n_coeffs()
            )));
        }
        let mut out = fm.clone();
        for mut col in out.values.column_iter_mut() {
            for (i, v) in col.iter_mut().enumerate() {
                *v = (*v - self.mean[i]) / self.std[i];
            }
        }
        Ok(out)
    }
}
