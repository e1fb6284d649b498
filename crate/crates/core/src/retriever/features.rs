//! Hashed bag-of-tokens features.
//!
//! Text is split on non-alphanumeric characters and at camelCase joints,
//! lowercased, and every token and adjacent token pair is hashed with
//! 64-bit FNV-1a into `hash_dim` buckets. Pairs hash the two tokens joined
//! by a single space. Counts are L2-normalized.

use std::collections::BTreeMap;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVec {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }
}

/// Splits on non-alphanumeric characters and camelCase boundaries, then
/// lowercases. `HTMLParser` gives `html`, `parser`; `KnowledgeFrame` gives
/// `knowledge`, `frame`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let lower_to_upper = (prev.is_lowercase() || prev.is_ascii_digit()) && cur.is_uppercase();
            let acronym_end = prev.is_uppercase()
                && cur.is_uppercase()
                && chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            if lower_to_upper || acronym_end {
                tokens.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        tokens.push(chars[start..].iter().collect::<String>().to_lowercase());
    }
    tokens
}

pub fn bucket(feature: &str, hash_dim: usize) -> u32 {
    (fnv1a(feature.as_bytes()) % hash_dim as u64) as u32
}

pub fn featurize(text: &str, hash_dim: usize) -> SparseVec {
    let tokens = tokenize(text);
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for tok in &tokens {
        *counts.entry(bucket(tok, hash_dim)).or_default() += 1.0;
    }
    for pair in tokens.windows(2) {
        let joined = format!("{} {}", pair[0], pair[1]);
        *counts.entry(bucket(&joined, hash_dim)).or_default() += 1.0;
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    SparseVec {
        entries: counts
            .into_iter()
            .map(|(i, v)| (i, if norm > 0.0 { v / norm } else { 0.0 }))
            .collect(),
    }
}
