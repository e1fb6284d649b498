//! Softmax cross-entropy training of the dual encoder.
//!
//! For a description `d` with features `x` and candidates `y_0` (positive),
//! `y_1..y_n` (negatives), the logits are `s_j = (P_d^T x) . (P_a^T y_j)` and
//! the loss is `logsumexp(s) - s_0`. Only rows of `P_d` and `P_a` touched by
//! non-zero features receive gradient, so updates are kept sparse.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::DocCatalog;
use crate::extract::TrainingPair;

use super::encoder::{EncoderParams, Side, DEFAULT_EMBED_DIM, DEFAULT_HASH_DIM};
use super::features::{featurize, SparseVec};
use super::RetrieverError;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub batch: usize,
    pub hash_dim: usize,
    pub embed_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-2,
            epochs: 10,
            seed: 0,
            batch: 10,
            hash_dim: DEFAULT_HASH_DIM,
            embed_dim: DEFAULT_EMBED_DIM,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Mean training loss of each epoch, measured while it ran.
    pub epoch_losses: Vec<f64>,
}

/// Sparse gradient: row index to a dense `embed_dim` row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub d_rows: BTreeMap<u32, Vec<f64>>,
    pub a_rows: BTreeMap<u32, Vec<f64>>,
}

impl Gradient {
    fn add_row(rows: &mut BTreeMap<u32, Vec<f64>>, row: u32, scale: f64, v: &[f64]) {
        let dst = rows.entry(row).or_insert_with(|| vec![0.0; v.len()]);
        for (d, x) in dst.iter_mut().zip(v) {
            *d += scale * x;
        }
    }

    fn accumulate(&mut self, other: &Gradient) {
        for (&r, v) in &other.d_rows {
            Self::add_row(&mut self.d_rows, r, 1.0, v);
        }
        for (&r, v) in &other.a_rows {
            Self::add_row(&mut self.a_rows, r, 1.0, v);
        }
    }

    /// Dense value for `side[row, col]`, zero when the row is untouched.
    pub fn get(&self, side: Side, row: u32, col: usize) -> f64 {
        let rows = match side {
            Side::Description => &self.d_rows,
            Side::Api => &self.a_rows,
        };
        rows.get(&row).map_or(0.0, |r| r[col])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss and gradient for one description against `candidates`, whose first
/// entry is the positive.
pub fn loss_and_gradient(
    params: &EncoderParams,
    description: &SparseVec,
    candidates: &[SparseVec],
) -> (f64, Gradient) {
    let q = params.project(Side::Description, description);
    let embeddings: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| params.project(Side::Api, c))
        .collect();
    let logits: Vec<f64> = embeddings.iter().map(|a| dot(&q, a)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = max + z.ln() - logits[0];

    // dL/ds_j = softmax_j - [j == 0]
    let g: Vec<f64> = exps
        .iter()
        .enumerate()
        .map(|(j, e)| e / z - if j == 0 { 1.0 } else { 0.0 })
        .collect();

    let mut dq = vec![0.0; params.embed_dim];
    for (gj, a) in g.iter().zip(&embeddings) {
        for (d, x) in dq.iter_mut().zip(a) {
            *d += gj * x;
        }
    }
    let mut grad = Gradient::default();
    for &(row, v) in &description.entries {
        Gradient::add_row(&mut grad.d_rows, row, v, &dq);
    }
    for (gj, cand) in g.iter().zip(candidates) {
        for &(row, v) in &cand.entries {
            Gradient::add_row(&mut grad.a_rows, row, gj * v, &q);
        }
    }
    (loss, grad)
}

fn apply(params: &mut EncoderParams, grad: &Gradient, step: f64) {
    let d = params.embed_dim;
    for (side, rows) in [(Side::Description, &grad.d_rows), (Side::Api, &grad.a_rows)] {
        let m = params.matrix_mut(side);
        for (&row, g) in rows {
            let dst = &mut m[row as usize * d..(row as usize + 1) * d];
            for (w, x) in dst.iter_mut().zip(g) {
                *w -= step * x;
            }
        }
    }
}

/// Featurized training pairs: description first, then positive and negatives.
pub struct PreparedPairs {
    items: Vec<(SparseVec, Vec<SparseVec>)>,
}

impl PreparedPairs {
    pub fn new(pairs: &[TrainingPair], catalog: &DocCatalog, hash_dim: usize) -> Result<Self, RetrieverError> {
        let mut api_cache: HashMap<&str, SparseVec> = HashMap::new();
        let mut items = Vec::with_capacity(pairs.len());
        for pair in pairs {
            let mut cands = Vec::with_capacity(pair.negatives.len() + 1);
            for id in std::iter::once(&pair.positive).chain(&pair.negatives) {
                let feats = match api_cache.get(id.as_str()) {
                    Some(f) => f.clone(),
                    None => {
                        let record = catalog
                            .get(id)
                            .ok_or_else(|| RetrieverError::UnknownApi(id.clone()))?;
                        let f = featurize(&record.basic_text(), hash_dim);
                        api_cache.insert(record.api_id.as_str(), f.clone());
                        f
                    }
                };
                cands.push(feats);
            }
            items.push((featurize(&pair.description, hash_dim), cands));
        }
        Ok(PreparedPairs { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Mean loss over all pairs under `params`.
    pub fn mean_loss(&self, params: &EncoderParams) -> f64 {
        let total: f64 = self
            .items
            .iter()
            .map(|(d, c)| loss_and_gradient(params, d, c).0)
            .sum();
        total / self.items.len().max(1) as f64
    }
}

/// Trains from a fresh seeded initialization.
pub fn train(
    pairs: &[TrainingPair],
    catalog: &DocCatalog,
    config: &TrainConfig,
) -> Result<(EncoderParams, TrainLog), RetrieverError> {
    let params = EncoderParams::init(config.hash_dim, config.embed_dim, config.seed)?;
    train_from(params, pairs, catalog, config)
}

/// Continues training `params` with mini-batch SGD. Pair order is reshuffled
/// every epoch by a generator seeded from `config.seed`.
pub fn train_from(
    mut params: EncoderParams,
    pairs: &[TrainingPair],
    catalog: &DocCatalog,
    config: &TrainConfig,
) -> Result<(EncoderParams, TrainLog), RetrieverError> {
    if pairs.is_empty() {
        return Err(RetrieverError::NoPairs);
    }
    params.validate()?;
    let prepared = PreparedPairs::new(pairs, catalog, params.hash_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7261_6e6b);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let batch = config.batch.max(1);
    let mut log = TrainLog::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let mut acc = Gradient::default();
            for &i in chunk {
                let (desc, cands) = &prepared.items[i];
                let (loss, grad) = loss_and_gradient(&params, desc, cands);
                if !loss.is_finite() {
                    return Err(RetrieverError::NonFiniteLoss {
                        epoch,
                        pair: i,
                        loss,
                    });
                }
                total += loss;
                acc.accumulate(&grad);
            }
            if config.lr != 0.0 {
                apply(&mut params, &acc, config.lr / chunk.len() as f64);
            }
        }
        log.epoch_losses.push(total / prepared.len() as f64);
    }
    Ok((params, log))
}
