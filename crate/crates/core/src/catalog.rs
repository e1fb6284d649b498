//! Structured API documentation.
//!
//! A catalog is a JSON-lines file with one [`ApiRecord`] per line. Records
//! keep file order, which is also the order every query returns them in.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
    #[error("line {line}: duplicate path `{path}` in library `{library}`")]
    DuplicatePath {
        line: usize,
        library: String,
        path: String,
    },
    #[error("line {line}: duplicate api_id `{api_id}`")]
    DuplicateId { line: usize, api_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(rename = "type", default)]
    pub type_text: String,
    #[serde(default)]
    pub default: String,
    #[serde(default)]
    pub description: String,
}

/// One documentation entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub api_id: String,
    pub library: String,
    /// Short name, the final dotted segment of `path`.
    pub name: String,
    /// Fully qualified name such as `DataFrame.head`.
    pub path: String,
    pub signature: String,
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub related: Vec<String>,
    #[serde(default)]
    pub examples: Vec<String>,
}

impl ApiRecord {
    /// Name, signature and the first sentence of the description, the text
    /// the API-side encoder sees.
    pub fn basic_text(&self) -> String {
        format!(
            "{} {} {}",
            self.name,
            self.signature,
            first_sentence(&self.description)
        )
    }

    fn validate(&self) -> Result<(), String> {
        if self.api_id.is_empty() {
            return Err("api_id is empty".into());
        }
        if self.path.is_empty() {
            return Err("path is empty".into());
        }
        let last = self.path.rsplit('.').next().unwrap_or_default();
        if last != self.name {
            return Err(format!(
                "name `{}` is not the final segment of path `{}`",
                self.name, self.path
            ));
        }
        if self.signature.trim().is_empty() {
            return Err("signature is empty".into());
        }
        if self.description.trim().is_empty() && self.examples.is_empty() {
            return Err("description is empty and there are no examples".into());
        }
        Ok(())
    }
}

/// An immutable, validated set of API records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocCatalog {
    library: String,
    records: Vec<ApiRecord>,
    name_index: HashMap<String, Vec<usize>>,
    id_index: HashMap<String, usize>,
}

impl DocCatalog {
    /// Validates `records` and builds the lookup tables. The `line` carried
    /// by errors is the 1-based record position.
    pub fn from_records(records: Vec<ApiRecord>) -> Result<Self, CatalogError> {
        let mut catalog = DocCatalog {
            library: records.first().map(|r| r.library.clone()).unwrap_or_default(),
            ..Default::default()
        };
        let mut paths: HashSet<(String, String)> = HashSet::new();
        for (pos, record) in records.into_iter().enumerate() {
            let line = pos + 1;
            record
                .validate()
                .map_err(|message| CatalogError::Invalid { line, message })?;
            if !paths.insert((record.library.clone(), record.path.clone())) {
                return Err(CatalogError::DuplicatePath {
                    line,
                    library: record.library,
                    path: record.path,
                });
            }
            if catalog.id_index.contains_key(&record.api_id) {
                return Err(CatalogError::DuplicateId {
                    line,
                    api_id: record.api_id,
                });
            }
            catalog.id_index.insert(record.api_id.clone(), pos);
            catalog
                .name_index
                .entry(record.name.clone())
                .or_default()
                .push(pos);
            catalog.records.push(record);
        }
        Ok(catalog)
    }

    /// Parses JSON-lines text. Blank lines are skipped but still counted.
    pub fn parse_str(text: &str) -> Result<Self, CatalogError> {
        let mut records = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let record: ApiRecord = serde_json::from_str(raw).map_err(|e| CatalogError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            records.push(record);
            lines.push(i + 1);
        }
        // Report validation errors against file lines, not record positions.
        Self::from_records(records).map_err(|e| remap_line(e, &lines))
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn library(&self) -> &str {
        &self.library
    }

    pub fn records(&self) -> &[ApiRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, api_id: &str) -> Option<&ApiRecord> {
        self.id_index.get(api_id).map(|&i| &self.records[i])
    }

    /// All records named `name`, in catalog order.
    pub fn lookup_by_name(&self, name: &str) -> Vec<&ApiRecord> {
        self.name_index
            .get(name)
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    pub fn count_by_name(&self, name: &str) -> usize {
        self.name_index.get(name).map_or(0, Vec::len)
    }

    /// Picks one record named `name`. Several matches are resolved uniformly
    /// with a generator seeded from `seed`, so the result is a pure function
    /// of the arguments.
    pub fn resolve_name(&self, name: &str, seed: u64) -> Option<&ApiRecord> {
        let idx = self.name_index.get(name)?;
        match idx.len() {
            0 => None,
            1 => Some(&self.records[idx[0]]),
            n => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Some(&self.records[idx[rng.random_range(0..n)]])
            }
        }
    }
}

fn remap_line(err: CatalogError, lines: &[usize]) -> CatalogError {
    let fix = |line: usize| lines.get(line.wrapping_sub(1)).copied().unwrap_or(line);
    match err {
        CatalogError::Invalid { line, message } => CatalogError::Invalid {
            line: fix(line),
            message,
        },
        CatalogError::DuplicatePath {
            line,
            library,
            path,
        } => CatalogError::DuplicatePath {
            line: fix(line),
            library,
            path,
        },
        CatalogError::DuplicateId { line, api_id } => CatalogError::DuplicateId {
            line: fix(line),
            api_id,
        },
        other => other,
    }
}

pub fn parse_catalog(path: impl AsRef<Path>) -> Result<DocCatalog, CatalogError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    DocCatalog::parse_str(&text)
}

/// Returns the description up to and including the first `.`, `!` or `?`
/// that is followed by whitespace or the end of the text.
pub fn first_sentence(description: &str) -> &str {
    let text = description.trim();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            match chars.peek() {
                None => return text,
                Some(&(_, next)) if next.is_whitespace() => return &text[..i + c.len_utf8()],
                _ => {}
            }
        }
    }
    text
}
