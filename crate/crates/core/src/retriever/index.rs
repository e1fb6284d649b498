use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::DocCatalog;

use super::encoder::{score, EncoderParams, Side};
use super::RetrieverError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub api_id: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexHeader {
    embed_dim: usize,
    built_with: String,
}

/// Flat store of pre-encoded API vectors, scanned exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiIndex {
    pub embed_dim: usize,
    /// Fingerprint of the params the vectors were encoded with.
    pub built_with: String,
    pub entries: Vec<IndexEntry>,
}

pub fn build_index(catalog: &DocCatalog, params: &EncoderParams) -> ApiIndex {
    ApiIndex {
        embed_dim: params.embed_dim,
        built_with: params.fingerprint(),
        entries: catalog
            .records()
            .iter()
            .map(|r| IndexEntry {
                api_id: r.api_id.clone(),
                vector: params.encode(Side::Api, &r.basic_text()),
            })
            .collect(),
    }
}

fn rank(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl ApiIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails unless `params` are the ones the index was built with.
    pub fn check_params(&self, params: &EncoderParams) -> Result<(), RetrieverError> {
        let fp = params.fingerprint();
        if fp != self.built_with {
            return Err(RetrieverError::IndexMismatch {
                index: self.built_with.clone(),
                params: fp,
            });
        }
        Ok(())
    }

    /// Top-k by descending score for an already-encoded query. Ties go to
    /// the smaller api_id.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<(String, f64)>, RetrieverError> {
        if k == 0 {
            return Err(RetrieverError::InvalidK);
        }
        if self.entries.is_empty() {
            return Err(RetrieverError::EmptyIndex);
        }
        let mut scored = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            // Adding 0.0 folds -0.0 into 0.0 so the two rank as equal.
            scored.push((e.api_id.clone(), score(query, &e.vector)? + 0.0));
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, rank);
            scored.truncate(k);
        }
        scored.sort_by(rank);
        Ok(scored)
    }

    pub fn write_to(&self, w: impl Write) -> std::io::Result<()> {
        let mut w = BufWriter::new(w);
        let header = IndexHeader {
            embed_dim: self.embed_dim,
            built_with: self.built_with.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read_from(r: impl std::io::Read) -> Result<Self, RetrieverError> {
        let bad = |line: usize, message: String| RetrieverError::IndexFormat { line, message };
        let mut lines = BufReader::new(r).lines().enumerate();
        let header: IndexHeader = match lines.next() {
            Some((_, Ok(l))) => serde_json::from_str(&l).map_err(|e| bad(1, e.to_string()))?,
            Some((_, Err(e))) => return Err(bad(1, e.to_string())),
            None => return Err(bad(1, "missing header".into())),
        };
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in lines {
            let line = line.map_err(|e| bad(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let e: IndexEntry = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
            if e.vector.len() != header.embed_dim {
                return Err(bad(
                    i + 1,
                    format!("vector has {} values, expected {}", e.vector.len(), header.embed_dim),
                ));
            }
            if !seen.insert(e.api_id.clone()) {
                return Err(bad(i + 1, format!("duplicate api_id {:?}", e.api_id)));
            }
            entries.push(e);
        }
        Ok(ApiIndex {
            embed_dim: header.embed_dim,
            built_with: header.built_with,
            entries,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrieverError> {
        let path = path.as_ref();
        let f = fs::File::create(path).map_err(|e| RetrieverError::io(path, e))?;
        self.write_to(f).map_err(|e| RetrieverError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RetrieverError> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| RetrieverError::io(path, e))?;
        Self::read_from(f)
    }
}

/// Encodes `query` on the description side and returns the top-k entries.
pub fn retrieve(
    index: &ApiIndex,
    params: &EncoderParams,
    query: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, RetrieverError> {
    if params.embed_dim != index.embed_dim {
        return Err(RetrieverError::DimensionMismatch {
            expected: index.embed_dim,
            found: params.embed_dim,
        });
    }
    index.search(&params.encode(Side::Description, query), k)
}
