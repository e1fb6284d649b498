//! Whole-token keyword substitution for turning public-library code and
//! documentation into a renamed private library.
//!
//! Tokens are maximal runs of `[A-Za-z0-9_]`. A token equal to a source
//! keyword is replaced by its target; everything else passes through
//! byte for byte, including string and comment contents.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

pub const PANDAS_MONKEY: &str = include_str!("../maps/pandas_monkey.tsv");
pub const NUMPY_BEATNUM: &str = include_str!("../maps/numpy_beatnum.tsv");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParaphraseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate source keyword {source_kw:?}")]
    Duplicate { line: usize, source_kw: String },
    #[error("rewrite chain {}", .0.join(" -> "))]
    Loop(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown builtin map {0:?} (expected pandas_monkey or numpy_beatnum)")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordMap {
    entries: Vec<(String, String)>,
    lookup: HashMap<String, usize>,
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(is_ident_byte)
}

impl KeywordMap {
    /// Validates entries: every side a single token, sources unique, and no
    /// target equal to some other entry's source.
    pub fn new(entries: Vec<(String, String)>) -> Result<Self, ParaphraseError> {
        let mut lookup = HashMap::with_capacity(entries.len());
        for (i, (s, t)) in entries.iter().enumerate() {
            for side in [s, t] {
                if !is_token(side) {
                    return Err(ParaphraseError::Malformed {
                        line: i + 1,
                        message: format!("{side:?} is not a single identifier token"),
                    });
                }
            }
            if lookup.insert(s.clone(), i).is_some() {
                return Err(ParaphraseError::Duplicate {
                    line: i + 1,
                    source_kw: s.clone(),
                });
            }
        }
        for (s, t) in &entries {
            if s != t && lookup.contains_key(t) {
                let mut chain = vec![s.clone(), t.clone()];
                let mut cur = t;
                while let Some(&j) = lookup.get(cur) {
                    let next = &entries[j].1;
                    if next == cur {
                        break;
                    }
                    let seen = chain.contains(next);
                    chain.push(next.clone());
                    if seen {
                        break;
                    }
                    cur = next;
                }
                return Err(ParaphraseError::Loop(chain));
            }
        }
        Ok(KeywordMap { entries, lookup })
    }

    /// Parses `source<TAB>target` rows; blank and `#` lines are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self, ParaphraseError> {
        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(ParaphraseError::Malformed {
                    line: i + 1,
                    message: format!("expected 2 tab-separated columns, found {}", cols.len()),
                });
            }
            entries.push((cols[0].trim().to_string(), cols[1].trim().to_string()));
            lines.push(i + 1);
        }
        // Report file line numbers rather than entry positions.
        KeywordMap::new(entries).map_err(|e| match e {
            ParaphraseError::Malformed { line, message } => ParaphraseError::Malformed {
                line: lines[line - 1],
                message,
            },
            ParaphraseError::Duplicate { line, source_kw } => ParaphraseError::Duplicate {
                line: lines[line - 1],
                source_kw,
            },
            other => other,
        })
    }

    pub fn builtin(name: &str) -> Result<Self, ParaphraseError> {
        let text = match name {
            "pandas_monkey" | "monkey" => PANDAS_MONKEY,
            "numpy_beatnum" | "beatnum" => NUMPY_BEATNUM,
            _ => return Err(ParaphraseError::UnknownBuiltin(name.into())),
        };
        Self::parse_tsv(text)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn target(&self, source: &str) -> Option<&str> {
        self.lookup.get(source).map(|&i| self.entries[i].1.as_str())
    }

    /// Sources ordered longest first, ties in file order.
    pub fn sources_longest_first(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.entries.iter().map(|(s, _)| s.as_str()).collect();
        s.sort_by_key(|x| std::cmp::Reverse(x.len()));
        s
    }

    pub fn apply(&self, text: &str) -> String {
        let bytes = text.as_bytes();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while i < bytes.len() {
            if is_ident_byte(bytes[i]) {
                let start = i;
                while i < bytes.len() && is_ident_byte(bytes[i]) {
                    i += 1;
                }
                let tok = &text[start..i];
                out.push_str(self.target(tok).unwrap_or(tok));
            } else {
                let start = i;
                while i < bytes.len() && !is_ident_byte(bytes[i]) {
                    i += 1;
                }
                out.push_str(&text[start..i]);
            }
        }
        out
    }
}

pub fn load_map(path: impl AsRef<Path>) -> Result<KeywordMap, ParaphraseError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ParaphraseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    KeywordMap::parse_tsv(&text)
}

pub fn apply(map: &KeywordMap, text: &str) -> String {
    map.apply(text)
}
