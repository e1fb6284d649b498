//! Corpus extraction: code blocks, description/API training pairs and
//! per-file re-sampling metadata.

mod blocks;
mod names;
mod pairs;
mod weights;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::catalog::DocCatalog;

pub use blocks::split_blocks;
pub use names::{
    called_names, count_functions, extract_alias_map, extract_annotation, extract_api_names,
    AliasMap, Binding, BindingKind,
};
pub use pairs::{make_pairs, DEFAULT_NEGATIVES};
pub use weights::{api_weight, resample_weight, sample_weighted, star_weight, unit_test_weight};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("need {needed} negative candidates but only {eligible} records are eligible")]
    CatalogTooSmall { eligible: usize, needed: usize },
    #[error("invalid sampling weights: {0}")]
    Weights(String),
    #[error("failed to read corpus {path}: {message}")]
    Io { path: String, message: String },
}

/// A contiguous snippet of a source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlock {
    pub file_id: String,
    pub index_in_file: usize,
    pub text: String,
    /// Docstring or leading comments; empty when the block has neither.
    pub annotation: String,
    pub api_names: Vec<String>,
    /// 1-based inclusive line range in the source file.
    pub line_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileMeta {
    pub file_id: String,
    pub stars: u64,
    pub n_api: u64,
    pub m_api: u64,
    pub r_ut: f64,
}

/// A meta record together with its weight, as written to meta files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMeta {
    #[serde(flatten)]
    pub meta: FileMeta,
    pub weight: f64,
}

impl From<FileMeta> for WeightedMeta {
    fn from(meta: FileMeta) -> Self {
        let weight = resample_weight(&meta);
        WeightedMeta { meta, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub description: String,
    pub positive: String,
    pub negatives: Vec<String>,
}

/// Aliases of `text` limited to `libraries`; an empty slice keeps all.
fn tracked_aliases(text: &str, libraries: &[&str]) -> AliasMap {
    let all = extract_alias_map(text);
    if libraries.is_empty() {
        all
    } else {
        all.restricted_to(libraries)
    }
}

/// Splits a file into blocks and fills in annotations and API names.
/// Only imports of `libraries` are tracked (all imports when empty).
pub fn extract_file(file_id: &str, text: &str, libraries: &[&str]) -> Vec<CodeBlock> {
    let aliases = tracked_aliases(text, libraries);
    split_blocks(text)
        .into_iter()
        .map(|mut b| {
            b.file_id = file_id.to_string();
            b.annotation = extract_annotation(&b.text);
            b.api_names = extract_api_names(&b.text, &aliases);
            b
        })
        .collect()
}

fn catalog_libraries(catalog: &DocCatalog) -> Vec<&str> {
    let mut seen = HashSet::new();
    catalog
        .records()
        .iter()
        .map(|r| r.library.as_str())
        .filter(|l| seen.insert(*l))
        .collect()
}

/// Counts API names, their documentation matches and the unit-test rate
/// of one file. Only imports of the catalog's libraries are tracked.
pub fn compute_file_meta(file_id: &str, file_text: &str, stars: u64, catalog: &DocCatalog) -> FileMeta {
    let aliases = tracked_aliases(file_text, &catalog_libraries(catalog));
    let names = extract_api_names(file_text, &aliases);
    let m_api = names.iter().map(|n| catalog.count_by_name(n) as u64).sum();
    let (functions, tests) = count_functions(file_text);
    FileMeta {
        file_id: file_id.to_string(),
        stars,
        n_api: names.len() as u64,
        m_api,
        r_ut: if functions == 0 {
            0.0
        } else {
            tests as f64 / functions as f64
        },
    }
}

/// A corpus file identified by its path relative to the corpus root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub file_id: String,
    pub text: String,
}

/// Reads every `*.py` file under `root`, sorted by relative path, dropping
/// files whose text exactly repeats an earlier one.
pub fn load_corpus(root: &Path) -> Result<Vec<SourceFile>, ExtractError> {
    let io_err = |path: &Path, e: &dyn std::fmt::Display| ExtractError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| io_err(root, &e))?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|e| e != "py") {
            continue;
        }
        let text = fs::read_to_string(entry.path()).map_err(|e| io_err(entry.path(), &e))?;
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let file_id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push(SourceFile { file_id, text });
    }
    files.sort_by(|a, b| a.file_id.cmp(&b.file_id));
    Ok(dedup_exact(files))
}

pub fn dedup_exact(files: Vec<SourceFile>) -> Vec<SourceFile> {
    let mut seen = HashSet::new();
    files
        .into_iter()
        .filter(|f| seen.insert(f.text.clone()))
        .collect()
}
