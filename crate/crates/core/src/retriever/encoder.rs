use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{featurize, SparseVec};
use super::RetrieverError;

pub const DEFAULT_HASH_DIM: usize = 32_768;
pub const DEFAULT_EMBED_DIM: usize = 768;

const PARAMS_MAGIC: &[u8] = b"PRIVCODE-ENCODER-1\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Description,
    Api,
}

/// Two linear maps from hashed features to `embed_dim`, one per side.
/// Matrices are row-major `hash_dim x embed_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub hash_dim: usize,
    pub embed_dim: usize,
    pub proj_d: Vec<f64>,
    pub proj_a: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ParamsHeader {
    hash_dim: usize,
    embed_dim: usize,
    fingerprint: String,
}

impl EncoderParams {
    /// Gaussian init with variance `1 / embed_dim`. Both sides start from
    /// the same matrix so untrained scores approximate the cosine of the
    /// hashed features; training then moves them apart.
    pub fn init(hash_dim: usize, embed_dim: usize, seed: u64) -> Result<Self, RetrieverError> {
        if hash_dim == 0 || embed_dim == 0 {
            return Err(RetrieverError::InvalidParams(format!(
                "dimensions must be positive (hash_dim={hash_dim}, embed_dim={embed_dim})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, (1.0 / embed_dim as f64).sqrt()).expect("valid std");
        let proj: Vec<f64> = (0..hash_dim * embed_dim).map(|_| normal.sample(&mut rng)).collect();
        Ok(EncoderParams {
            hash_dim,
            embed_dim,
            proj_d: proj.clone(),
            proj_a: proj,
        })
    }

    pub fn zeros(hash_dim: usize, embed_dim: usize) -> Self {
        EncoderParams {
            hash_dim,
            embed_dim,
            proj_d: vec![0.0; hash_dim * embed_dim],
            proj_a: vec![0.0; hash_dim * embed_dim],
        }
    }

    pub fn validate(&self) -> Result<(), RetrieverError> {
        let cells = self.hash_dim * self.embed_dim;
        if self.embed_dim == 0 || self.hash_dim == 0 {
            return Err(RetrieverError::InvalidParams("zero dimension".into()));
        }
        if self.proj_d.len() != cells || self.proj_a.len() != cells {
            return Err(RetrieverError::InvalidParams(format!(
                "matrix sizes {}/{} do not match {}x{}",
                self.proj_d.len(),
                self.proj_a.len(),
                self.hash_dim,
                self.embed_dim
            )));
        }
        if !self.proj_d.iter().chain(&self.proj_a).all(|v| v.is_finite()) {
            return Err(RetrieverError::InvalidParams("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn matrix(&self, side: Side) -> &[f64] {
        match side {
            Side::Description => &self.proj_d,
            Side::Api => &self.proj_a,
        }
    }

    pub(crate) fn matrix_mut(&mut self, side: Side) -> &mut [f64] {
        match side {
            Side::Description => &mut self.proj_d,
            Side::Api => &mut self.proj_a,
        }
    }

    /// Projects already-featurized input.
    pub fn project(&self, side: Side, features: &SparseVec) -> Vec<f64> {
        let m = self.matrix(side);
        let d = self.embed_dim;
        let mut out = vec![0.0; d];
        for &(row, v) in &features.entries {
            let row = &m[row as usize * d..(row as usize + 1) * d];
            for (o, w) in out.iter_mut().zip(row) {
                *o += v * w;
            }
        }
        out
    }

    pub fn encode(&self, side: Side, text: &str) -> Vec<f64> {
        self.project(side, &featurize(text, self.hash_dim))
    }

    /// Hex SHA-256 prefix over dimensions and both matrices.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.hash_dim as u64).to_le_bytes());
        h.update((self.embed_dim as u64).to_le_bytes());
        for v in self.proj_d.iter().chain(&self.proj_a) {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())[..16].to_string()
    }

    /// Binary layout: a magic line, a JSON header line, then `proj_d` and
    /// `proj_a` as little-endian f64 in row-major order.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(PARAMS_MAGIC)?;
        let header = ParamsHeader {
            hash_dim: self.hash_dim,
            embed_dim: self.embed_dim,
            fingerprint: self.fingerprint(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(8 * 4096);
        for v in self.proj_d.iter().chain(&self.proj_a) {
            buf.extend_from_slice(&v.to_le_bytes());
            if buf.len() >= 8 * 4096 {
                w.write_all(&buf)?;
                buf.clear();
            }
        }
        w.write_all(&buf)?;
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(r: impl Read) -> Result<Self, RetrieverError> {
        let bad = |m: String| RetrieverError::InvalidParams(m);
        let mut r = BufReader::new(r);
        let mut magic = vec![0u8; PARAMS_MAGIC.len()];
        r.read_exact(&mut magic).map_err(|e| bad(e.to_string()))?;
        if magic != PARAMS_MAGIC {
            return Err(bad("not an encoder params file".into()));
        }
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| bad(e.to_string()))?;
        let header: ParamsHeader = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let cells = header
            .hash_dim
            .checked_mul(header.embed_dim)
            .ok_or_else(|| bad("dimensions overflow".into()))?;
        let mut read_matrix = || -> Result<Vec<f64>, RetrieverError> {
            let mut bytes = vec![0u8; cells * 8];
            r.read_exact(&mut bytes).map_err(|e| bad(format!("truncated matrix: {e}")))?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let proj_d = read_matrix()?;
        let proj_a = read_matrix()?;
        let params = EncoderParams {
            hash_dim: header.hash_dim,
            embed_dim: header.embed_dim,
            proj_d,
            proj_a,
        };
        params.validate()?;
        if params.fingerprint() != header.fingerprint {
            return Err(bad("fingerprint mismatch".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrieverError> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| RetrieverError::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|e| RetrieverError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrieverError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| RetrieverError::io(path, e))?;
        Self::read_from(file)
    }
}

/// Dot product.
pub fn score(q: &[f64], a: &[f64]) -> Result<f64, RetrieverError> {
    if q.len() != a.len() {
        return Err(RetrieverError::DimensionMismatch {
            expected: q.len(),
            found: a.len(),
        });
    }
    Ok(q.iter().zip(a).map(|(x, y)| x * y).sum())
}
