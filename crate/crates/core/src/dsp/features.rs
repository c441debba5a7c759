use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"EAFM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffKind {
    Mfcc,
    TdMfcc,
    Delta,
}

/// `n_coeffs x n_frames` features; each column is one timestep for the
/// classifier reservoir.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub kind: CoeffKind,
    pub frame_times_s: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>, kind: CoeffKind, frame_times_s: Vec<f64>) -> Result<Self> {
        if values.ncols() == 0 || values.nrows() == 0 {
            return Err(Error::arg("feature matrix needs at least one coefficient and one frame"));
        }
        if frame_times_s.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} frame times for {} frames",
                frame_times_s.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("feature values must be finite"));
        }
        Ok(Self {
            values,
            kind,
            frame_times_s,
        })
    }

    /// Frames at `k * hop_s`.
    pub fn with_hop(values: DMatrix<f64>, kind: CoeffKind, hop_s: f64) -> Result<Self> {
        let times = (0..values.ncols()).map(|k| k as f64 * hop_s).collect();
        Self::new(values, kind, times)
    }

    pub fn n_coeffs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    /// Rows are coefficients, columns are frames; values use nine
    /// significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.values.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.8e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// `EAFM`, `u32` rows, `u32` columns, then row-major little-endian `f64`.
    pub fn to_binary(&self) -> Vec<u8> {
        let (r, c) = self.values.shape();
        let mut out = Vec::with_capacity(12 + 8 * r * c);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(r as u32).to_le_bytes());
        out.extend_from_slice(&(c as u32).to_le_bytes());
        for i in 0..r {
            for j in 0..c {
                out.extend_from_slice(&self.values[(i, j)].to_le_bytes());
            }
        }
        out
    }

    /// Inverse of [`to_binary`](Self::to_binary). The container carries no
    /// timing, so the caller supplies the kind and hop.
    pub fn from_binary(bytes: &[u8], kind: CoeffKind, hop_s: f64) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::Container("missing EAFM header".into()));
        }
        let r = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let c = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if body.len() != 8 * r * c {
            return Err(Error::Container(format!(
                "EAFM body holds {} bytes, expected {} for {r}x{c}",
                body.len(),
                8 * r * c
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()));
        Self::with_hop(DMatrix::from_row_iterator(r, c, values), kind, hop_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layout() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.5, 123456789.0, 0.0, 1e-12, 2.0]);
        let fm = FeatureMatrix::with_hop(m, CoeffKind::Mfcc, 0.01).unwrap();
        let mut buf = Vec::new();
        fm.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1.00000000e0,-5.00000000e-1,1.23456789e8\n0.00000000e0,1.00000000e-12,2.00000000e0\n"
        );
    }

    #[test]
    fn binary_header_is_little_endian() {
        let fm = FeatureMatrix::with_hop(DMatrix::from_row_slice(1, 2, &[1.0, 2.0]), CoeffKind::Mfcc, 0.01).unwrap();
        let b = fm.to_binary();
        assert_eq!(&b[..12], b"EAFM\x01\x00\x00\x00\x02\x00\x00\x00");
        assert_eq!(&b[12..20], &1.0f64.to_le_bytes());
        assert!(FeatureMatrix::from_binary(&b[..19], CoeffKind::Mfcc, 0.01).is_err());
    }

    #[test]
    fn rejects_invalid() {
        assert!(FeatureMatrix::with_hop(DMatrix::zeros(3, 0), CoeffKind::Mfcc, 0.01).is_err());
        assert!(FeatureMatrix::with_hop(DMatrix::from_element(1, 1, f64::NAN), CoeffKind::Mfcc, 0.01).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(r in 1usize..6, c in 1usize..9, seed in any::<u64>()) {
            let vals: Vec<f64> = (0..r * c).map(|i| ((seed as f64) * 1e-15 + i as f64).sin() * 1e3).collect();
            let fm = FeatureMatrix::with_hop(DMatrix::from_row_slice(r, c, &vals), CoeffKind::TdMfcc, 0.01).unwrap();
            let back = FeatureMatrix::from_binary(&fm.to_binary(), CoeffKind::TdMfcc, 0.01).unwrap();
            prop_assert_eq!(back, fm);
        }
    }
}
