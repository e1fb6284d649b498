//! Prompt prefixes built from API documentation.
//!
//! Each API renders as a commented block so the prompt stays valid source:
//!
//! ```text
//! # API: KnowledgeFrame.iscontain(values)
//! #   Whether each element is contained in values.
//! # Example:
//! #   kf.iscontain([1, 2])
//! ```
//!
//! Blocks are joined by a `#` line and followed by the code context.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{first_sentence, ApiRecord, DocCatalog};

pub const DEFAULT_NOISE_RATE: f64 = 0.05;
/// Number of retrieved APIs shown to a human for selection.
pub const PRESENTED: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("noise rate {0} is outside [0, 1)")]
    InvalidNoiseRate(f64),
    #[error("top-k selection needs k >= 1")]
    InvalidK,
    #[error("selected api {0:?} was not among the presented candidates")]
    NotPresented(String),
    #[error("{0} candidates presented, at most {PRESENTED} allowed")]
    TooManyPresented(usize),
    #[error("api id {0:?} is not in the catalog")]
    UnknownApi(String),
    #[error("unknown prompt format {0:?} (expected b, e or be)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptFormat {
    #[serde(rename = "b")]
    Basic,
    #[serde(rename = "e")]
    Examples,
    #[serde(rename = "be")]
    BasicAndExamples,
}

impl FromStr for PromptFormat {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "basic" => Ok(PromptFormat::Basic),
            "e" | "examples" => Ok(PromptFormat::Examples),
            "be" | "basic-and-examples" => Ok(PromptFormat::BasicAndExamples),
            _ => Err(PromptError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptFormat::Basic => "b",
            PromptFormat::Examples => "e",
            PromptFormat::BasicAndExamples => "be",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedApi {
    pub text: String,
    /// Examples were requested but the record has none, so Basic was used.
    pub fell_back: bool,
}

fn comment_line(out: &mut String, prefix: &str, body: &str) {
    let line = format!("{prefix}{body}");
    out.push_str(line.trim_end());
    out.push('\n');
}

fn render_basic(record: &ApiRecord) -> String {
    let mut out = String::new();
    comment_line(&mut out, "# API: ", &format!("{}{}", record.path, record.signature));
    let sentence = first_sentence(&record.description);
    if !sentence.is_empty() {
        comment_line(&mut out, "#   ", sentence);
    }
    out
}

fn render_example(example: &str) -> String {
    let mut out = String::from("# Example:\n");
    for line in example.trim_end_matches('\n').split('\n') {
        comment_line(&mut out, "#   ", line.trim_end_matches('\r'));
    }
    out
}

pub fn render_api(record: &ApiRecord, format: PromptFormat) -> RenderedApi {
    let example = record.examples.first();
    let (text, fell_back) = match (format, example) {
        (PromptFormat::Basic, _) => (render_basic(record), false),
        (PromptFormat::Examples, Some(e)) => (render_example(e), false),
        (PromptFormat::BasicAndExamples, Some(e)) => (render_basic(record) + &render_example(e), false),
        (_, None) => (render_basic(record), true),
    };
    RenderedApi { text, fell_back }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyApis {
    pub apis: Vec<ApiRecord>,
    /// api_id of the noise record, if one was inserted.
    pub inserted: Option<String>,
}

/// With probability `noise_rate` adds one catalog record not already in
/// `apis`, then shuffles. One Bernoulli draw per call.
pub fn inject_noise_and_shuffle(
    apis: &[ApiRecord],
    catalog: &DocCatalog,
    noise_rate: f64,
    seed: u64,
) -> Result<NoisyApis, PromptError> {
    if !(0.0..1.0).contains(&noise_rate) {
        return Err(PromptError::InvalidNoiseRate(noise_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = apis.to_vec();
    let mut inserted = None;
    if rng.random::<f64>() < noise_rate {
        let present: HashSet<&str> = apis.iter().map(|a| a.api_id.as_str()).collect();
        let candidates: Vec<&ApiRecord> = catalog
            .records()
            .iter()
            .filter(|r| !present.contains(r.api_id.as_str()))
            .collect();
        if !candidates.is_empty() {
            let pick = candidates[rng.random_range(0..candidates.len())];
            inserted = Some(pick.api_id.clone());
            out.push(pick.clone());
        }
    }
    out.shuffle(&mut rng);
    Ok(NoisyApis { apis: out, inserted })
}

/// A human's answer after seeing the top retrieved APIs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "choice", content = "api_ids", rename_all = "snake_case")]
pub enum HumanChoice {
    Selected(Vec<String>),
    NoneOfTheAbove,
    NotSure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ApiSelection {
    NoApi,
    Oracle { api_ids: Vec<String> },
    TopK { k: usize },
    Human { choice: HumanChoice },
}

/// Maps a human choice over the presented candidates to the APIs to prompt.
/// "Not sure" takes the first two candidates.
pub fn resolve_selection(presented: &[String], choice: &HumanChoice) -> Result<Vec<String>, PromptError> {
    if presented.len() > PRESENTED {
        return Err(PromptError::TooManyPresented(presented.len()));
    }
    match choice {
        HumanChoice::NoneOfTheAbove => Ok(Vec::new()),
        HumanChoice::NotSure => Ok(presented.iter().take(2).cloned().collect()),
        HumanChoice::Selected(ids) => {
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            for id in ids {
                if !presented.contains(id) {
                    return Err(PromptError::NotPresented(id.clone()));
                }
                if seen.insert(id.as_str()) {
                    out.push(id.clone());
                }
            }
            Ok(out)
        }
    }
}

impl ApiSelection {
    /// API ids to prompt, given the ranked retrieval results for the task.
    pub fn resolve(&self, retrieved: &[String]) -> Result<Vec<String>, PromptError> {
        match self {
            ApiSelection::NoApi => Ok(Vec::new()),
            ApiSelection::Oracle { api_ids } => Ok(api_ids.clone()),
            ApiSelection::TopK { k: 0 } => Err(PromptError::InvalidK),
            ApiSelection::TopK { k } => Ok(retrieved.iter().take(*k).cloned().collect()),
            ApiSelection::Human { choice } => {
                let shown = &retrieved[..retrieved.len().min(PRESENTED)];
                resolve_selection(shown, choice)
            }
        }
    }
}

/// Looks up ids in the catalog, keeping their order.
pub fn records_for(catalog: &DocCatalog, ids: &[String]) -> Result<Vec<ApiRecord>, PromptError> {
    ids.iter()
        .map(|id| {
            catalog
                .get(id)
                .cloned()
                .ok_or_else(|| PromptError::UnknownApi(id.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub apis: Vec<ApiRecord>,
    pub format: PromptFormat,
    pub code_context: String,
    pub noise_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledPrompt {
    pub text: String,
    /// api_ids in the order they were rendered, noise included.
    pub api_ids: Vec<String>,
    pub inserted_noise: Option<String>,
    /// Records rendered as Basic because they had no example.
    pub fallbacks: Vec<String>,
}

pub fn assemble_prompt(spec: &PromptSpec, catalog: &DocCatalog) -> Result<AssembledPrompt, PromptError> {
    if !(0.0..1.0).contains(&spec.noise_rate) {
        return Err(PromptError::InvalidNoiseRate(spec.noise_rate));
    }
    if spec.apis.is_empty() {
        return Ok(AssembledPrompt {
            text: spec.code_context.clone(),
            api_ids: Vec::new(),
            inserted_noise: None,
            fallbacks: Vec::new(),
        });
    }
    let noisy = inject_noise_and_shuffle(&spec.apis, catalog, spec.noise_rate, spec.seed)?;
    let mut blocks = Vec::with_capacity(noisy.apis.len());
    let mut fallbacks = Vec::new();
    for record in &noisy.apis {
        let r = render_api(record, spec.format);
        if r.fell_back {
            fallbacks.push(record.api_id.clone());
        }
        blocks.push(r.text);
    }
    let mut text = blocks.join("#\n");
    text.push_str(&spec.code_context);
    Ok(AssembledPrompt {
        text,
        api_ids: noisy.apis.iter().map(|r| r.api_id.clone()).collect(),
        inserted_noise: noisy.inserted,
        fallbacks,
    })
}
