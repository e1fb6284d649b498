use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::DocCatalog;

use super::{CodeBlock, ExtractError, TrainingPair};

pub const DEFAULT_NEGATIVES: usize = 8;

/// One pair per (annotated block, resolvable API name). Names matching
/// several records are resolved with [`DocCatalog::resolve_name`]; negatives
/// are drawn without replacement from records unrelated to any of the
/// block's API names.
pub fn make_pairs(
    blocks: &[CodeBlock],
    catalog: &DocCatalog,
    n_neg: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>, ExtractError> {
    if catalog.len() < n_neg + 1 {
        return Err(ExtractError::CatalogTooSmall {
            eligible: catalog.len().saturating_sub(1),
            needed: n_neg,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for block in blocks {
        if block.annotation.trim().is_empty() {
            continue;
        }
        let related: HashSet<&str> = block
            .api_names
            .iter()
            .flat_map(|name| catalog.lookup_by_name(name))
            .map(|r| r.api_id.as_str())
            .collect();
        if related.is_empty() {
            continue;
        }
        let eligible: Vec<&str> = catalog
            .records()
            .iter()
            .map(|r| r.api_id.as_str())
            .filter(|id| !related.contains(id))
            .collect();
        if eligible.len() < n_neg {
            return Err(ExtractError::CatalogTooSmall {
                eligible: eligible.len(),
                needed: n_neg,
            });
        }
        for name in &block.api_names {
            let Some(positive) = catalog.resolve_name(name, rng.next_u64()) else {
                continue;
            };
            let negatives = rand::seq::index::sample(&mut rng, eligible.len(), n_neg)
                .into_iter()
                .map(|i| eligible[i].to_string())
                .collect();
            pairs.push(TrainingPair {
                description: block.annotation.clone(),
                positive: positive.api_id.clone(),
                negatives,
            });
        }
    }
    Ok(pairs)
}
