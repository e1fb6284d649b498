use std::collections::HashSet;

use super::RetrieverError;

fn top_k<'a>(results: &'a [String], k: usize) -> HashSet<&'a str> {
    results.iter().take(k).map(String::as_str).collect()
}

/// Fraction of distinct oracle ids found in the first `k` results.
pub fn recall_at_k(results: &[String], oracle: &[String], k: usize) -> Result<f64, RetrieverError> {
    let oracle: HashSet<&str> = oracle.iter().map(String::as_str).collect();
    if oracle.is_empty() {
        return Err(RetrieverError::EmptyOracle);
    }
    let top = top_k(results, k);
    Ok(oracle.iter().filter(|id| top.contains(*id)).count() as f64 / oracle.len() as f64)
}

/// 1 when every oracle id is in the first `k` results, else 0.
pub fn retrieval_accuracy(results: &[String], oracle: &[String], k: usize) -> Result<u8, RetrieverError> {
    if oracle.is_empty() {
        return Err(RetrieverError::EmptyOracle);
    }
    let top = top_k(results, k);
    Ok(oracle.iter().all(|id| top.contains(id.as_str())) as u8)
}
