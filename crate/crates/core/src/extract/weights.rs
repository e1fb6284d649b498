//! Per-file re-sampling weights.
//!
//! `w = w_api * w_star * w_ut` with
//!
//! ```text
//! w_api  = 5.0 - clip(ln(M_api / N_api), 0, 5) * 0.2
//! w_star = 1.0 + clip(ln(N_star + 1), 0, 5) * 0.2
//! w_ut   = clip(0.5 + (1 - R_ut), 0, 1)
//! ```
//!
//! so `w_api` lies in [4, 5], `w_star` in [1, 2], `w_ut` in [0.5, 1].

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExtractError, FileMeta};

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.clamp(lo, hi)
}

/// Ambiguity factor. A file without API names gets the maximum, 5.0.
pub fn api_weight(n_api: u64, m_api: u64) -> f64 {
    if n_api == 0 {
        return 5.0;
    }
    let ratio = m_api as f64 / n_api as f64;
    // ln(0) = -inf clips to 0 as well.
    5.0 - clip(ratio.ln(), 0.0, 5.0) * 0.2
}

pub fn star_weight(stars: u64) -> f64 {
    1.0 + clip((stars as f64 + 1.0).ln(), 0.0, 5.0) * 0.2
}

pub fn unit_test_weight(r_ut: f64) -> f64 {
    clip(0.5 + (1.0 - r_ut), 0.0, 1.0)
}

pub fn resample_weight(meta: &FileMeta) -> f64 {
    api_weight(meta.n_api, meta.m_api) * star_weight(meta.stars) * unit_test_weight(meta.r_ut)
}

/// Draws `count` file indices with probability proportional to `weights`.
pub fn sample_weighted(weights: &[f64], count: usize, seed: u64) -> Result<Vec<usize>, ExtractError> {
    let dist = WeightedIndex::new(weights).map_err(|e| ExtractError::Weights(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| dist.sample(&mut rng)).collect())
}
