//! Lexical import tracking, API-name extraction and block annotations.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::pylex::{is_bytes_or_fstring, lex, string_body, Lexed, TokKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingKind {
    /// `import x` / `import x as y`
    Module,
    /// `from x import a` / `from x import a as b`
    Member,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub library: String,
    pub kind: BindingKind,
}

/// Local names bound by import statements, mapped to their root library.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    bindings: BTreeMap<String, Binding>,
}

impl AliasMap {
    pub fn get(&self, alias: &str) -> Option<&Binding> {
        self.bindings.get(alias)
    }

    pub fn library_of(&self, alias: &str) -> Option<&str> {
        self.bindings.get(alias).map(|b| b.library.as_str())
    }

    pub fn insert(&mut self, alias: impl Into<String>, library: impl Into<String>, kind: BindingKind) {
        self.bindings.insert(
            alias.into(),
            Binding {
                library: library.into(),
                kind,
            },
        );
    }

    /// Merges `other` into `self`; later bindings win.
    pub fn extend(&mut self, other: &AliasMap) {
        for (k, v) in &other.bindings {
            self.bindings.insert(k.clone(), v.clone());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    /// The plain alias → library view.
    pub fn to_library_map(&self) -> BTreeMap<String, String> {
        self.bindings
            .iter()
            .map(|(k, v)| (k.clone(), v.library.clone()))
            .collect()
    }

    /// Keeps only bindings whose library is in `libraries`.
    pub fn restricted_to(&self, libraries: &[&str]) -> AliasMap {
        AliasMap {
            bindings: self
                .bindings
                .iter()
                .filter(|(_, b)| libraries.contains(&b.library.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Reads `a.b.c` starting at token `i`; returns the dotted text and the next index.
fn dotted(lx: &Lexed<'_>, line: &[usize], mut i: usize) -> Option<(String, usize)> {
    let tok = &lx.tokens[*line.get(i)?];
    if tok.kind != TokKind::Name {
        return None;
    }
    let mut out = lx.text(tok).to_string();
    i += 1;
    while line.get(i).is_some_and(|&t| lx.is_op(t, "."))
        && line.get(i + 1).is_some_and(|&t| lx.tokens[t].kind == TokKind::Name)
    {
        out.push('.');
        out.push_str(lx.text(&lx.tokens[line[i + 1]]));
        i += 2;
    }
    Some((out, i))
}

fn root(dotted: &str) -> &str {
    dotted.split('.').next().unwrap_or(dotted)
}

fn name_at<'a>(lx: &Lexed<'a>, line: &[usize], i: usize) -> Option<&'a str> {
    line.get(i)
        .map(|&t| &lx.tokens[t])
        .filter(|t| t.kind == TokKind::Name)
        .map(|t| lx.text(t))
}

fn parse_import(lx: &Lexed<'_>, stmt: &[usize], map: &mut AliasMap) {
    let is_op = |i: usize, op: &str| stmt.get(i).is_some_and(|&t| lx.is_op(t, op));
    match name_at(lx, stmt, 0) {
        Some("import") => {
            let mut i = 1;
            while let Some((path, next)) = dotted(lx, stmt, i) {
                i = next;
                if name_at(lx, stmt, i) == Some("as") {
                    if let Some(alias) = name_at(lx, stmt, i + 1) {
                        map.insert(alias, root(&path), BindingKind::Module);
                    }
                    i += 2;
                } else {
                    map.insert(root(&path), root(&path), BindingKind::Module);
                }
                if !is_op(i, ",") {
                    break;
                }
                i += 1;
            }
        }
        Some("from") => {
            // Relative imports have no library root.
            let Some((path, mut i)) = dotted(lx, stmt, 1) else {
                return;
            };
            if name_at(lx, stmt, i) != Some("import") {
                return;
            }
            i += 1;
            if is_op(i, "(") {
                i += 1;
            }
            while let Some(member) = name_at(lx, stmt, i) {
                i += 1;
                let bound = if name_at(lx, stmt, i) == Some("as") {
                    let alias = name_at(lx, stmt, i + 1);
                    i += 2;
                    alias
                } else {
                    Some(member)
                };
                if let Some(bound) = bound {
                    map.insert(bound, root(&path), BindingKind::Member);
                }
                if !is_op(i, ",") {
                    break;
                }
                i += 1;
            }
        }
        _ => {}
    }
}

/// Collects `import X`, `import X as Y`, `from X import a, b` and
/// `from X import a as c` bindings anywhere in the text.
pub fn extract_alias_map(file_text: &str) -> AliasMap {
    let lx = lex(file_text);
    let mut map = AliasMap::default();
    for line in lx.logical_lines() {
        for stmt in line.split(|&t| lx.is_op(t, ";")) {
            parse_import(&lx, stmt, &mut map);
        }
    }
    map
}

/// Short names of calls rooted at a tracked alias, in order of first
/// occurrence. `alias.a.b(...)` yields `b`; a call on the result continues
/// the chain (`mk.F(x).g()` yields `F`, `g`). Names bound by
/// `from lib import name` also count when called directly.
pub fn extract_api_names(code: &str, aliases: &AliasMap) -> Vec<String> {
    let lx = lex(code);
    let toks = &lx.tokens;
    let mut found: Vec<(usize, String)> = Vec::new();
    for i in 0..toks.len() {
        if toks[i].kind != TokKind::Name || (i > 0 && lx.is_op(i - 1, ".")) {
            continue;
        }
        let Some(binding) = aliases.get(lx.text(&toks[i])) else {
            continue;
        };
        let mut j = i + 1;
        let mut last_attr: Option<usize> = None;
        let mut root_called = false;
        loop {
            if lx.is_op(j, ".") && toks.get(j + 1).is_some_and(|t| t.kind == TokKind::Name) {
                last_attr = Some(j + 1);
                j += 2;
            } else if lx.is_op(j, "(") {
                match last_attr {
                    Some(a) => found.push((toks[a].start, lx.text(&toks[a]).to_string())),
                    None if binding.kind == BindingKind::Member && !root_called => {
                        found.push((toks[i].start, lx.text(&toks[i]).to_string()))
                    }
                    None => {}
                }
                root_called = true;
                last_attr = None;
                match lx.matching_close(j) {
                    Some(close) => j = close + 1,
                    None => break,
                }
            } else {
                break;
            }
        }
    }
    found.sort_by_key(|(pos, _)| *pos);
    let mut seen = HashSet::new();
    found
        .into_iter()
        .filter_map(|(_, name)| seen.insert(name.clone()).then_some(name))
        .collect()
}

/// Names of every attribute or plain-name call in `code`, regardless of
/// the receiver. Used where receivers cannot be resolved lexically.
pub fn called_names(code: &str) -> Vec<String> {
    let lx = lex(code);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, tok) in lx.tokens.iter().enumerate() {
        if tok.kind == TokKind::Name && lx.is_op(i + 1, "(") {
            let name = lx.text(tok);
            if seen.insert(name) {
                out.push(name.to_string());
            }
        }
    }
    out
}

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn docstring_at(lx: &Lexed<'_>, idx: usize) -> Option<String> {
    let tok = lx.tokens.get(idx)?;
    if tok.kind != TokKind::Str {
        return None;
    }
    let ends_stmt = lx
        .tokens
        .get(idx + 1)
        .is_none_or(|t| t.kind == TokKind::Newline || (t.kind == TokKind::Op && lx.text(t) == ";"));
    let literal = lx.text(tok);
    (ends_stmt && !is_bytes_or_fstring(literal)).then(|| collapse_ws(string_body(literal)))
}

fn next_code(lx: &Lexed<'_>, mut i: usize) -> usize {
    while lx
        .tokens
        .get(i)
        .is_some_and(|t| matches!(t.kind, TokKind::Comment | TokKind::Newline))
    {
        i += 1;
    }
    i
}

/// The block's docstring if it has one, else its leading comment lines
/// joined with spaces, else an empty string. Whitespace is collapsed.
pub fn extract_annotation(block_text: &str) -> String {
    let lx = lex(block_text);
    let toks = &lx.tokens;

    let mut comments = Vec::new();
    let mut i = 0;
    while i < toks.len() && toks[i].kind == TokKind::Comment {
        comments.push(lx.text(&toks[i]).trim_start_matches('#').trim());
        i += 1;
    }
    let first = i;

    // Skip decorators, each a logical line starting with `@`.
    let mut stmt = first;
    while lx.is_op(stmt, "@") {
        while stmt < toks.len() && toks[stmt].kind != TokKind::Newline {
            stmt += 1;
        }
        stmt = next_code(&lx, stmt);
    }
    let mut kw = stmt;
    if lx.is_name(kw, "async") {
        kw += 1;
    }
    let doc = if lx.is_name(kw, "def") || lx.is_name(kw, "class") {
        let mut depth = 0usize;
        let mut colon = None;
        for (j, tok) in toks.iter().enumerate().skip(kw + 1) {
            if tok.kind == TokKind::Newline {
                break;
            }
            if tok.kind != TokKind::Op {
                continue;
            }
            match lx.text(tok) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                ":" if depth == 0 => {
                    colon = Some(j);
                    break;
                }
                _ => {}
            }
        }
        colon.and_then(|c| docstring_at(&lx, next_code(&lx, c + 1)))
    } else if first == stmt {
        docstring_at(&lx, first)
    } else {
        None
    };
    doc.unwrap_or_else(|| collapse_ws(&comments.join(" ")))
}

/// Counts `def` statements and how many of them are unit tests: the name
/// starts with `test` or an enclosing class name starts with `Test`.
pub fn count_functions(file_text: &str) -> (usize, usize) {
    let lx = lex(file_text);
    // (column, is a Test* class)
    let mut scopes: Vec<(usize, bool)> = Vec::new();
    let (mut total, mut tests) = (0, 0);
    for line in lx.logical_lines() {
        let col = lx.tokens[line[0]].col;
        let mut k = 0;
        if lx.is_name(line[0], "async") {
            k = 1;
        }
        let Some(&kw_idx) = line.get(k) else { continue };
        let is_def = lx.is_name(kw_idx, "def");
        let is_class = lx.is_name(kw_idx, "class");
        if !is_def && !is_class {
            continue;
        }
        let Some(name) = line
            .get(k + 1)
            .map(|&t| &lx.tokens[t])
            .filter(|t| t.kind == TokKind::Name)
            .map(|t| lx.text(t))
        else {
            continue;
        };
        while scopes.last().is_some_and(|&(c, _)| c >= col) {
            scopes.pop();
        }
        if is_def {
            total += 1;
            if name.starts_with("test") || scopes.iter().any(|&(_, t)| t) {
                tests += 1;
            }
            scopes.push((col, false));
        } else {
            scopes.push((col, name.starts_with("Test")));
        }
    }
    (total, tests)
}
