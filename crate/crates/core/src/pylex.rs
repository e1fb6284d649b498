//! A tolerant lexer for indentation-delimited (Python-style) source.
//!
//! It never fails: unterminated strings run to the end of their line (or of
//! the text, for triple-quoted ones) and unbalanced brackets are clamped.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokKind {
    Name,
    Number,
    Str,
    Op,
    Comment,
    /// End of a logical line.
    Newline,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub start: usize,
    pub end: usize,
    /// 1-based line of the first byte.
    #[allow(dead_code)]
    pub line: usize,
    pub col: usize,
}

#[derive(Debug)]
pub(crate) struct Lexed<'a> {
    pub src: &'a str,
    pub tokens: Vec<Token>,
    /// `continued[i]` is true when physical line `i` (0-based) starts inside
    /// an open bracket, a triple-quoted string or after a backslash.
    pub continued: Vec<bool>,
}

impl<'a> Lexed<'a> {
    pub fn text(&self, tok: &Token) -> &'a str {
        &self.src[tok.start..tok.end]
    }

    pub fn is_op(&self, idx: usize, op: &str) -> bool {
        self.tokens
            .get(idx)
            .is_some_and(|t| t.kind == TokKind::Op && self.text(t) == op)
    }

    pub fn is_name(&self, idx: usize, name: &str) -> bool {
        self.tokens
            .get(idx)
            .is_some_and(|t| t.kind == TokKind::Name && self.text(t) == name)
    }

    /// Index of the bracket closing the one at `open`, if any.
    pub fn matching_close(&self, open: usize) -> Option<usize> {
        let mut depth = 0usize;
        for (i, tok) in self.tokens.iter().enumerate().skip(open) {
            if tok.kind != TokKind::Op {
                continue;
            }
            match self.text(tok) {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return Some(i);
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Splits the token stream into logical lines, dropping comments and
    /// `Newline` markers. Each entry holds token indices.
    pub fn logical_lines(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        for (i, tok) in self.tokens.iter().enumerate() {
            match tok.kind {
                TokKind::Comment => {}
                TokKind::Newline => {
                    if !cur.is_empty() {
                        out.push(std::mem::take(&mut cur));
                    }
                }
                _ => cur.push(i),
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

/// Length in bytes of a string prefix (`r`, `b`, `rb`, `f`, ...) at `rest`
/// when it is immediately followed by a quote.
fn string_prefix_len(rest: &str) -> Option<usize> {
    let bytes = rest.as_bytes();
    let mut n = 0;
    while n < 2 && n < bytes.len() && matches!(bytes[n], b'r' | b'R' | b'b' | b'B' | b'u' | b'U' | b'f' | b'F') {
        n += 1;
    }
    for len in (0..=n).rev() {
        if matches!(bytes.get(len), Some(b'\'') | Some(b'"')) {
            return Some(len);
        }
    }
    None
}

pub(crate) fn lex(src: &str) -> Lexed<'_> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut continued = vec![false];
    let mut pos = 0usize;
    let mut line = 1usize;
    let mut line_start = 0usize;
    let mut depth = 0usize;
    let mut backslash = false;
    let mut logical_has_tokens = false;

    macro_rules! push {
        ($kind:expr, $start:expr, $end:expr, $line:expr, $col:expr) => {{
            if $kind != TokKind::Comment {
                logical_has_tokens = true;
            }
            tokens.push(Token {
                kind: $kind,
                start: $start,
                end: $end,
                line: $line,
                col: $col,
            });
        }};
    }

    while pos < bytes.len() {
        let c = src[pos..].chars().next().unwrap();
        match c {
            '\n' => {
                if depth == 0 && !backslash && logical_has_tokens {
                    tokens.push(Token {
                        kind: TokKind::Newline,
                        start: pos,
                        end: pos,
                        line,
                        col: pos - line_start,
                    });
                    logical_has_tokens = false;
                }
                continued.push(depth > 0 || backslash);
                backslash = false;
                pos += 1;
                line += 1;
                line_start = pos;
            }
            ' ' | '\t' | '\r' | '\x0c' => pos += 1,
            '\\' if bytes.get(pos + 1) == Some(&b'\n') => {
                backslash = true;
                pos += 1;
            }
            '#' => {
                let end = src[pos..].find('\n').map_or(src.len(), |e| pos + e);
                push!(TokKind::Comment, pos, end, line, pos - line_start);
                pos = end;
            }
            _ if string_prefix_len(&src[pos..]).is_some()
                && (c == '\'' || c == '"' || c.is_ascii_alphabetic()) =>
            {
                let prefix = string_prefix_len(&src[pos..]).unwrap();
                let start = pos;
                let (tok_line, col) = (line, pos - line_start);
                let q = bytes[pos + prefix];
                let triple = bytes.get(pos + prefix + 1) == Some(&q) && bytes.get(pos + prefix + 2) == Some(&q);
                let mut i = pos + prefix + if triple { 3 } else { 1 };
                let mut end = None;
                while i < bytes.len() {
                    let b = bytes[i];
                    if b == b'\\' {
                        if bytes.get(i + 1) == Some(&b'\n') {
                            continued.push(true);
                            line += 1;
                            line_start = i + 2;
                        }
                        i += 2;
                        continue;
                    }
                    if b == b'\n' {
                        if !triple {
                            break;
                        }
                        continued.push(true);
                        line += 1;
                        line_start = i + 1;
                    } else if b == q {
                        if !triple {
                            end = Some(i + 1);
                            break;
                        }
                        if bytes.get(i + 1) == Some(&q) && bytes.get(i + 2) == Some(&q) {
                            end = Some(i + 3);
                            break;
                        }
                    }
                    i += 1;
                }
                let end = end.unwrap_or(i.min(bytes.len()));
                push!(TokKind::Str, start, end, tok_line, col);
                pos = end;
            }
            _ if is_ident_start(c) => {
                let end = src[pos..]
                    .char_indices()
                    .find(|&(_, ch)| !is_ident_continue(ch))
                    .map_or(src.len(), |(e, _)| pos + e);
                push!(TokKind::Name, pos, end, line, pos - line_start);
                pos = end;
            }
            _ if c.is_ascii_digit()
                || (c == '.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit)) =>
            {
                let end = src[pos..]
                    .char_indices()
                    .find(|&(_, ch)| !(ch.is_ascii_alphanumeric() || ch == '.' || ch == '_'))
                    .map_or(src.len(), |(e, _)| pos + e);
                push!(TokKind::Number, pos, end, line, pos - line_start);
                pos = end;
            }
            _ => {
                match c {
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => depth = depth.saturating_sub(1),
                    _ => {}
                }
                let end = pos + c.len_utf8();
                push!(TokKind::Op, pos, end, line, pos - line_start);
                pos = end;
            }
        }
    }
    if logical_has_tokens {
        tokens.push(Token {
            kind: TokKind::Newline,
            start: src.len(),
            end: src.len(),
            line,
            col: src.len() - line_start,
        });
    }
    Lexed {
        src,
        tokens,
        continued,
    }
}

/// Content of a string literal token with prefix and quotes removed.
/// Escape sequences are left as written.
pub(crate) fn string_body(literal: &str) -> &str {
    let prefix = string_prefix_len(literal).unwrap_or(0);
    let rest = &literal[prefix..];
    let Some(q) = rest.chars().next() else {
        return "";
    };
    let triple = if q == '"' { "\"\"\"" } else { "'''" };
    if let Some(inner) = rest.strip_prefix(triple) {
        return inner.strip_suffix(triple).unwrap_or(inner);
    }
    let inner = &rest[q.len_utf8()..];
    inner.strip_suffix(q).unwrap_or(inner)
}

/// True for `b''`/`f''` style literals, which never act as docstrings.
pub(crate) fn is_bytes_or_fstring(literal: &str) -> bool {
    let prefix = string_prefix_len(literal).unwrap_or(0);
    literal[..prefix].chars().any(|c| matches!(c, 'b' | 'B' | 'f' | 'F'))
}
