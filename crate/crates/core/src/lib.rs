//! Building blocks for code generation against private libraries: an API
//! documentation catalog, corpus extraction, a trainable dual-encoder
//! retriever, prompt construction, a completion-model client, a pass@k
//! evaluation harness and a keyword paraphraser.

pub mod catalog;
pub mod eval;
pub mod extract;
pub mod generation;
pub mod paraphrase;
pub mod prompt;
mod pylex;
pub mod retriever;

pub use catalog::{first_sentence, parse_catalog, ApiRecord, CatalogError, DocCatalog, Parameter};
pub use eval::{
    pass_at_k, BenchmarkProblem, CandidateStatus, EvalConfig, EvaluationReport, SandboxConfig, TaskCompletions,
};
pub use extract::{CodeBlock, FileMeta, TrainingPair};
pub use generation::{generate, Completion, CompletionModel, GenerationRequest, HttpModel, MockModel};
pub use paraphrase::KeywordMap;
pub use prompt::{
    assemble_prompt, render_api, resolve_selection, ApiSelection, AssembledPrompt, HumanChoice, PromptFormat,
    PromptSpec,
};
pub use retriever::{build_index, retrieve, ApiIndex, EncoderParams, TrainConfig};
