//! Indentation-aware splitting of a source file into code blocks.
//!
//! Every top-level definition (with its decorators and any comment lines
//! directly above it) is one block. Other top-level statements form runs
//! that end at a blank line or at the start of a definition.

use crate::pylex::{lex, Lexed};

use super::CodeBlock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UnitKind {
    Comment,
    Decorator,
    Def,
    Stmt,
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    kind: UnitKind,
    /// 0-based inclusive line range.
    start: usize,
    end: usize,
}

fn is_blank(line: &str) -> bool {
    line.trim().is_empty()
}

fn starts_keyword(line: &str, kw: &str) -> bool {
    line.strip_prefix(kw)
        .is_some_and(|rest| rest.starts_with(|c: char| c.is_whitespace() || c == ':' || c == '('))
}

fn classify(line: &str) -> UnitKind {
    if line.starts_with('#') {
        UnitKind::Comment
    } else if line.starts_with('@') {
        UnitKind::Decorator
    } else if starts_keyword(line, "def")
        || starts_keyword(line, "class")
        || line
            .strip_prefix("async")
            .is_some_and(|r| starts_keyword(r.trim_start(), "def") && r.starts_with(char::is_whitespace))
    {
        UnitKind::Def
    } else {
        UnitKind::Stmt
    }
}

/// Lines (0-based) that begin a top-level unit.
fn top_starts(lines: &[&str], lexed: &Lexed<'_>) -> Vec<bool> {
    let n = lines.len();
    let mut top = vec![false; n];
    let base = |i: usize| {
        !is_blank(lines[i])
            && !lexed.continued.get(i).copied().unwrap_or(false)
            && !lines[i].starts_with(|c: char| c.is_whitespace())
    };
    for i in 0..n {
        if !base(i) {
            continue;
        }
        if lines[i].starts_with('#') {
            // A column-0 comment inside an indented body is not a boundary.
            let next_code = (i + 1..n).find(|&j| {
                !is_blank(lines[j]) && !(base(j) && lines[j].starts_with('#'))
            });
            top[i] = match next_code {
                None => true,
                Some(j) => base(j),
            };
        } else {
            top[i] = true;
        }
    }
    // Stray indented text before any top-level line still needs a block.
    if let Some(first) = (0..n).find(|&i| !is_blank(lines[i])) {
        top[first] = true;
    }
    top
}

fn units(lines: &[&str], top: &[bool]) -> Vec<Unit> {
    let starts: Vec<usize> = (0..lines.len()).filter(|&i| top[i]).collect();
    let mut out = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let limit = starts.get(k + 1).copied().unwrap_or(lines.len());
        let end = (start..limit).rev().find(|&i| !is_blank(lines[i])).unwrap_or(start);
        out.push(Unit {
            kind: classify(lines[start]),
            start,
            end,
        });
    }
    out
}

/// Line ranges (0-based, inclusive) of the blocks of `text`.
pub(crate) fn block_spans(text: &str) -> Vec<(usize, usize)> {
    let lines: Vec<&str> = text.split('\n').collect();
    let lexed = lex(text);
    let top = top_starts(&lines, &lexed);
    let units = units(&lines, &top);

    let adjacent = |a: &Unit, b: &Unit| b.start == a.end + 1;
    // leads_def[i]: unit i starts a chain of comments/decorators that runs
    // without a blank line into a definition.
    let mut leads_def = vec![false; units.len()];
    for i in (0..units.len()).rev() {
        leads_def[i] = match units[i].kind {
            UnitKind::Def => true,
            UnitKind::Comment | UnitKind::Decorator => {
                i + 1 < units.len() && adjacent(&units[i], &units[i + 1]) && leads_def[i + 1]
            }
            UnitKind::Stmt => false,
        };
    }

    let mut spans = Vec::new();
    let mut i = 0;
    while i < units.len() {
        let start = units[i].start;
        if leads_def[i] {
            while units[i].kind != UnitKind::Def {
                i += 1;
            }
            spans.push((start, units[i].end));
            i += 1;
        } else {
            let mut end = units[i].end;
            i += 1;
            while i < units.len() && !leads_def[i] && adjacent(&units[i - 1], &units[i]) {
                end = units[i].end;
                i += 1;
            }
            spans.push((start, end));
        }
    }
    spans
}

/// Splits `file_text` into blocks. Annotation and API names are left empty;
/// see [`super::extract_file`] for the populated form.
pub fn split_blocks(file_text: &str) -> Vec<CodeBlock> {
    let lines: Vec<&str> = file_text.split('\n').collect();
    block_spans(file_text)
        .into_iter()
        .enumerate()
        .map(|(index, (s, e))| CodeBlock {
            file_id: String::new(),
            index_in_file: index,
            text: lines[s..=e].join("\n"),
            annotation: String::new(),
            api_names: Vec::new(),
            line_span: (s + 1, e + 1),
        })
        .collect()
}
