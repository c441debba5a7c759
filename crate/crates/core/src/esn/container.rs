//! `EARC` reservoir model container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "EARC" | u32 version
//! config: u64 n_nodes, u64 input_dim, f64 connection_prob,
//!         f64 spectral_radius_target, f64 leak_rate, f64 input_scale,
//!         f64 bias_scale, u64 seed
//! w_in:   n_nodes * input_dim f64, row-major
//! w_res:  u64 nnz, then nnz * (u32 row, u32 col, f64 value)
//! bias:   n_nodes f64
//! u8 has_readout
//!   u64 P, u64 N, f64 ridge_lambda, P * N f64 (w_out row-major), P f64 intercept,
//!   u8 has_normalization [u64 dim, dim * (f64 mean, f64 std)]
//! extension blocks until EOF: [u8; 4] tag, u64 length, payload
//! ```

use nalgebra::{DMatrix, DVector};

use super::{CsrMatrix, Esn, EsnConfig, Readout};
use crate::dsp::ZScore;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"EARC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EarcModel {
    pub esn: Esn,
    pub readout: Option<Readout>,
    /// Tagged payloads owned by higher layers (filterbanks, class labels).
    pub blocks: Vec<([u8; 4], Vec<u8>)>,
}

#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }
    pub fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }
    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }
    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Container(format!("truncated at byte {} (wanted {n} more)", self.pos)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.buf.len())
            .ok_or_else(|| Error::Container(format!("implausible length {v}")))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::Container(e.to_string()))
    }
}

impl EarcModel {
    pub fn new(esn: Esn, readout: Option<Readout>) -> Self {
        Self {
            esn,
            readout,
            blocks: Vec::new(),
        }
    }

    pub fn block(&self, tag: &[u8; 4]) -> Option<&[u8]> {
        self.blocks.iter().find(|(t, _)| t == tag).map(|(_, b)| b.as_slice())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        let c = &self.esn.config;
        w.u64(c.n_nodes as u64);
        w.u64(c.input_dim as u64);
        w.f64(c.connection_prob);
        w.f64(c.spectral_radius_target);
        w.f64(c.leak_rate);
        w.f64(c.input_scale);
        w.f64(c.bias_scale);
        w.u64(c.seed);
        for i in 0..c.n_nodes {
            for j in 0..c.input_dim {
                w.f64(self.esn.w_in[(i, j)]);
            }
        }
        w.u64(self.esn.w_res.nnz() as u64);
        for (i, j, v) in self.esn.w_res.triples() {
            w.u32(i as u32);
            w.u32(j as u32);
            w.f64(v);
        }
        self.esn.bias.iter().for_each(|&b| w.f64(b));
        match &self.readout {
            None => w.u8(0),
            Some(r) => {
                w.u8(1);
                write_readout(&mut w, r);
            }
        }
        for (tag, payload) in &self.blocks {
            w.bytes(tag);
            w.u64(payload.len() as u64);
            w.bytes(payload);
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != MAGIC {
            return Err(Error::Container("missing EARC magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Container(format!("unsupported EARC version {version}")));
        }
        let config = EsnConfig {
            n_nodes: r.len()?,
            input_dim: r.len()?,
            connection_prob: r.f64()?,
            spectral_radius_target: r.f64()?,
            leak_rate: r.f64()?,
            input_scale: r.f64()?,
            bias_scale: r.f64()?,
            seed: r.u64()?,
        };
        config.validate()?;
        let (n, m) = (config.n_nodes, config.input_dim);
        let w_in = DMatrix::from_row_slice(n, m, &r.f64s(n * m)?);
        let nnz = r.len()?;
        let mut triples = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let (i, j, v) = (r.u32()? as usize, r.u32()? as usize, r.f64()?);
            if i >= n || j >= n {
                return Err(Error::Container(format!("recurrent entry ({i}, {j}) outside {n}x{n}")));
            }
            triples.push((i, j, v));
        }
        let w_res = CsrMatrix::from_triples(n, triples);
        let bias = DVector::from_vec(r.f64s(n)?);
        let readout = match r.u8()? {
            0 => None,
            1 => Some(read_readout(&mut r)?),
            other => return Err(Error::Container(format!("bad readout flag {other}"))),
        };
        let mut blocks = Vec::new();
        while !r.is_empty() {
            let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
            let len = r.len()?;
            blocks.push((tag, r.take(len)?.to_vec()));
        }
        Ok(Self {
            esn: Esn { w_in, w_res, bias, config },
            readout,
            blocks,
        })
    }

    /// Human-readable sidecar describing the reservoir configuration.
    pub fn config_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.esn.config)?)
    }
}

pub(crate) fn write_readout(w: &mut ByteWriter, r: &Readout) {
    w.u64(r.n_outputs() as u64);
    w.u64(r.n_states() as u64);
    w.f64(r.ridge_lambda);
    for i in 0..r.n_outputs() {
        for j in 0..r.n_states() {
            w.f64(r.w_out[(i, j)]);
        }
    }
    r.intercept.iter().for_each(|&v| w.f64(v));
    match &r.input_normalization {
        None => w.u8(0),
        Some(z) => {
            w.u8(1);
            w.u64(z.dim() as u64);
            for (m, s) in z.mean.iter().zip(&z.std) {
                w.f64(*m);
                w.f64(*s);
            }
        }
    }
}

pub(crate) fn read_readout(r: &mut ByteReader<'_>) -> Result<Readout> {
    let p = r.len()?;
    let n = r.len()?;
    let ridge_lambda = r.f64()?;
    let w_out = DMatrix::from_row_slice(p, n, &r.f64s(p * n)?);
    let intercept = DVector::from_vec(r.f64s(p)?);
    let input_normalization = match r.u8()? {
        0 => None,
        1 => {
            let dim = r.len()?;
            let (mut mean, mut std) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
            for _ in 0..dim {
                mean.push(r.f64()?);
                std.push(r.f64()?);
            }
            Some(ZScore { mean, std })
        }
        other => return Err(Error::Container(format!("bad normalization flag {other}"))),
    };
    if w_out.iter().chain(intercept.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Container("non-finite readout weight".into()));
    }
    Ok(Readout {
        w_out,
        intercept,
        ridge_lambda,
        input_normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esn::{init_reservoir, train_readout};

    #[test]
    fn round_trip_with_readout_and_blocks() {
        let esn = init_reservoir(&EsnConfig { n_nodes: 12, input_dim: 2, seed: 4, ..Default::default() }).unwrap();
        let states = esn.collect_states(&DMatrix::from_fn(2, 30, |i, t| ((i + t) as f64).sin()), None).unwrap();
        let mut readout = train_readout(&states, &DMatrix::from_fn(3, 30, |i, t| (i * t) as f64), 1e-3).unwrap();
        readout.input_normalization = Some(ZScore { mean: vec![0.5, -1.0], std: vec![2.0, 1.0] });
        let mut model = EarcModel::new(esn, Some(readout));
        model.blocks.push((*b"TEST", vec![1, 2, 3]));
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..8], b"EARC\x01\x00\x00\x00");
        let back = EarcModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.block(b"TEST"), Some(&[1u8, 2, 3][..]));
        assert!(back.config_json().unwrap().contains("\"n_nodes\": 12"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(EarcModel::from_bytes(b"EARX").is_err());
        let esn = init_reservoir(&EsnConfig { n_nodes: 5, seed: 1, ..Default::default() }).unwrap();
        let bytes = EarcModel::new(esn, None).to_bytes();
        assert!(EarcModel::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
