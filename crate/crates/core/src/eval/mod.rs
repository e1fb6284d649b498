//! Sandbox execution of generated candidates, pass@k and report assembly.

mod passk;
mod sandbox;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::extract::{called_names, extract_alias_map, extract_api_names};
use crate::retriever::{recall_at_k, retrieval_accuracy};

pub use passk::pass_at_k;
pub use sandbox::{
    program_text, run_candidate, CandidateResult, CandidateStatus, SandboxConfig, DEFAULT_INTERPRETER,
    DEFAULT_TIMEOUT_MS,
};

pub const DEFAULT_RETRIEVAL_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("pass@k needs 0 <= c <= n and 1 <= k <= n (n={n}, c={c}, k={k})")]
    InvalidPassK { n: usize, c: usize, k: usize },
    #[error("sandbox setup: {0}")]
    Setup(String),
    #[error("task {task_id}: {have} samples, at least {need} needed")]
    MissingSamples { task_id: String, have: usize, need: usize },
    #[error("completions given for unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} appears more than once")]
    DuplicateTask(String),
    #[error("task {task_id}: {message}")]
    InvalidProblem { task_id: String, message: String },
    #[error("no k values requested")]
    EmptyKSet,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub task_id: String,
    pub context: String,
    pub test_code: String,
    #[serde(default)]
    pub oracle_api_ids: Vec<String>,
    #[serde(default)]
    pub difficulty_api_count: usize,
}

impl BenchmarkProblem {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |message: String| EvalError::InvalidProblem {
            task_id: self.task_id.clone(),
            message,
        };
        if self.test_code.trim().is_empty() {
            return Err(bad("test_code is empty".into()));
        }
        if !self.oracle_api_ids.is_empty() && self.difficulty_api_count != self.oracle_api_ids.len() {
            return Err(bad(format!(
                "difficulty_api_count {} differs from {} oracle apis",
                self.difficulty_api_count,
                self.oracle_api_ids.len()
            )));
        }
        Ok(())
    }
}

/// Generated samples for one task, as stored in a completions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCompletions {
    pub task_id: String,
    pub completions: Vec<String>,
    /// Paths or names of the APIs placed in the prompt.
    #[serde(default)]
    pub prompted_apis: Vec<String>,
    /// Ranked api_ids from the retriever, when retrieval was used.
    #[serde(default)]
    pub retrieved: Vec<String>,
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let io = |message: String| EvalError::Io {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| io(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn validate_benchmark(problems: &[BenchmarkProblem]) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for p in problems {
        if !seen.insert(p.task_id.as_str()) {
            return Err(EvalError::DuplicateTask(p.task_id.clone()));
        }
        p.validate()?;
    }
    Ok(())
}

pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<BenchmarkProblem>, EvalError> {
    let problems = read_jsonl(path.as_ref())?;
    validate_benchmark(&problems)?;
    Ok(problems)
}

pub fn load_completions(path: impl AsRef<Path>) -> Result<Vec<TaskCompletions>, EvalError> {
    read_jsonl(path.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Passed,
    /// None of the prompted APIs is called.
    Invalid,
    /// A prompted API is called but the program still fails.
    Incorrect,
}

/// Lexical check of whether the completion calls any prompted API. Names
/// are compared on their last dotted segment; calls through module aliases
/// from the context and calls on arbitrary receivers both count.
pub fn classify_error(context: &str, completion: &str, prompted: &[String], status: CandidateStatus) -> ErrorClass {
    if status == CandidateStatus::Pass {
        return ErrorClass::Passed;
    }
    let wanted: HashSet<&str> = prompted
        .iter()
        .map(|p| p.rsplit('.').next().unwrap_or(p))
        .collect();
    let aliases = extract_alias_map(&format!("{context}\n{completion}"));
    let called = extract_api_names(completion, &aliases)
        .into_iter()
        .chain(called_names(completion));
    for name in called {
        if wanted.contains(name.as_str()) {
            return ErrorClass::Incorrect;
        }
    }
    ErrorClass::Invalid
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub passed: usize,
    pub invalid: usize,
    pub incorrect: usize,
}

impl ClassCounts {
    fn add(&mut self, class: ErrorClass) {
        match class {
            ErrorClass::Passed => self.passed += 1,
            ErrorClass::Invalid => self.invalid += 1,
            ErrorClass::Incorrect => self.incorrect += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub task_id: String,
    pub n: usize,
    pub c: usize,
    pub classification_counts: ClassCounts,
    pub pass_at_k: BTreeMap<String, f64>,
    pub statuses: Vec<CandidateStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSummary {
    pub k: usize,
    /// Problems that had both an oracle list and retrieval results.
    pub problems: usize,
    pub recall_at_k: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_problem: Vec<ProblemReport>,
    /// Macro-average over problems, keyed by k.
    pub pass_at_k: BTreeMap<String, f64>,
    pub classification_counts: ClassCounts,
    pub retrieval: Option<RetrievalSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub k_set: Vec<usize>,
    pub retrieval_k: usize,
    pub sandbox: SandboxConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_set: vec![1, 10, 100],
            retrieval_k: DEFAULT_RETRIEVAL_K,
            sandbox: SandboxConfig::default(),
        }
    }
}

/// Executes one candidate. The sandbox implements this; tests can supply
/// fixed statuses instead.
pub trait CandidateRunner: Sync {
    fn run(&self, problem: &BenchmarkProblem, sample_index: usize, completion: &str) -> Result<CandidateResult, EvalError>;
}

impl CandidateRunner for SandboxConfig {
    fn run(&self, problem: &BenchmarkProblem, sample_index: usize, completion: &str) -> Result<CandidateResult, EvalError> {
        run_candidate(problem, sample_index, completion, self)
    }
}

/// Checks the sandbox, then runs every candidate and builds the report.
pub fn evaluate(
    problems: &[BenchmarkProblem],
    completions: &[TaskCompletions],
    config: &EvalConfig,
) -> Result<EvaluationReport, EvalError> {
    config.sandbox.check()?;
    evaluate_with(problems, completions, config, &config.sandbox, config.sandbox.worker_count())
}

pub fn evaluate_with(
    problems: &[BenchmarkProblem],
    completions: &[TaskCompletions],
    config: &EvalConfig,
    runner: &dyn CandidateRunner,
    workers: usize,
) -> Result<EvaluationReport, EvalError> {
    validate_benchmark(problems)?;
    let max_k = *config.k_set.iter().max().ok_or(EvalError::EmptyKSet)?;
    if config.k_set.contains(&0) {
        return Err(EvalError::InvalidPassK { n: 0, c: 0, k: 0 });
    }
    let known: HashSet<&str> = problems.iter().map(|p| p.task_id.as_str()).collect();
    let mut by_task: HashMap<&str, &TaskCompletions> = HashMap::new();
    for tc in completions {
        if !known.contains(tc.task_id.as_str()) {
            return Err(EvalError::UnknownTask(tc.task_id.clone()));
        }
        if by_task.insert(tc.task_id.as_str(), tc).is_some() {
            return Err(EvalError::DuplicateTask(tc.task_id.clone()));
        }
    }
    let mut samples: Vec<&TaskCompletions> = Vec::with_capacity(problems.len());
    for p in problems {
        let tc = by_task.get(p.task_id.as_str()).copied();
        let have = tc.map_or(0, |t| t.completions.len());
        if have < max_k {
            return Err(EvalError::MissingSamples {
                task_id: p.task_id.clone(),
                have,
                need: max_k,
            });
        }
        samples.push(tc.unwrap());
    }

    let jobs: Vec<(usize, usize)> = samples
        .iter()
        .enumerate()
        .flat_map(|(pi, tc)| (0..tc.completions.len()).map(move |si| (pi, si)))
        .collect();
    let results = run_jobs(problems, &samples, &jobs, runner, workers)?;

    let mut per_problem = Vec::with_capacity(problems.len());
    let mut totals = ClassCounts::default();
    let mut cursor = 0;
    for (p, tc) in problems.iter().zip(&samples) {
        let n = tc.completions.len();
        let mine = &results[cursor..cursor + n];
        cursor += n;
        let mut counts = ClassCounts::default();
        let mut c = 0;
        for (r, completion) in mine.iter().zip(&tc.completions) {
            if r.status == CandidateStatus::Pass {
                c += 1;
            }
            let class = classify_error(&p.context, completion, &tc.prompted_apis, r.status);
            counts.add(class);
            totals.add(class);
        }
        let mut pk = BTreeMap::new();
        for &k in &config.k_set {
            pk.insert(k.to_string(), pass_at_k(n, c, k)?);
        }
        per_problem.push(ProblemReport {
            task_id: p.task_id.clone(),
            n,
            c,
            classification_counts: counts,
            pass_at_k: pk,
            statuses: mine.iter().map(|r| r.status).collect(),
        });
    }

    let mut pass_at_k = BTreeMap::new();
    for &k in &config.k_set {
        let key = k.to_string();
        let sum: f64 = per_problem.iter().map(|r| r.pass_at_k[&key]).sum();
        pass_at_k.insert(key, if per_problem.is_empty() { 0.0 } else { sum / per_problem.len() as f64 });
    }

    Ok(EvaluationReport {
        per_problem,
        pass_at_k,
        classification_counts: totals,
        retrieval: retrieval_summary(problems, &samples, config.retrieval_k)?,
    })
}

fn retrieval_summary(
    problems: &[BenchmarkProblem],
    samples: &[&TaskCompletions],
    k: usize,
) -> Result<Option<RetrievalSummary>, EvalError> {
    let mut recall = 0.0;
    let mut accuracy = 0.0;
    let mut count = 0;
    for (p, tc) in problems.iter().zip(samples) {
        if p.oracle_api_ids.is_empty() || tc.retrieved.is_empty() {
            continue;
        }
        // Oracle is non-empty here, so the metrics cannot fail.
        recall += recall_at_k(&tc.retrieved, &p.oracle_api_ids, k).unwrap_or(0.0);
        accuracy += retrieval_accuracy(&tc.retrieved, &p.oracle_api_ids, k).unwrap_or(0) as f64;
        count += 1;
    }
    Ok((count > 0).then(|| RetrievalSummary {
        k,
        problems: count,
        recall_at_k: recall / count as f64,
        accuracy: accuracy / count as f64,
    }))
}

fn run_jobs(
    problems: &[BenchmarkProblem],
    samples: &[&TaskCompletions],
    jobs: &[(usize, usize)],
    runner: &dyn CandidateRunner,
    workers: usize,
) -> Result<Vec<CandidateResult>, EvalError> {
    let next = AtomicUsize::new(0);
    let first_error: Mutex<Option<EvalError>> = Mutex::new(None);
    let (tx, rx) = mpsc::channel();
    thread::scope(|s| {
        for _ in 0..workers.max(1).min(jobs.len().max(1)) {
            let tx = tx.clone();
            let (next, first_error) = (&next, &first_error);
            s.spawn(move || loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                if j >= jobs.len() || first_error.lock().unwrap().is_some() {
                    break;
                }
                let (pi, si) = jobs[j];
                match runner.run(&problems[pi], si, &samples[pi].completions[si]) {
                    Ok(r) => {
                        let _ = tx.send((j, r));
                    }
                    Err(e) => {
                        first_error.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    drop(tx);
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let mut out: Vec<(usize, CandidateResult)> = rx.into_iter().collect();
    out.sort_by_key(|(j, _)| *j);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_rules() {
        let ctx = "import monkey as mk\nkf = mk.KnowledgeFrame({'a': [1]})\n";
        let prompted = vec!["KnowledgeFrame.iscontain".to_string()];
        assert_eq!(classify_error(ctx, "x", &prompted, CandidateStatus::Pass), ErrorClass::Passed);
        assert_eq!(
            classify_error(ctx, "kf.sum()", &prompted, CandidateStatus::Fail),
            ErrorClass::Invalid
        );
        assert_eq!(
            classify_error(ctx, "kf.iscontain([1])", &prompted, CandidateStatus::Fail),
            ErrorClass::Incorrect
        );
        // A mention that is not a call does not count.
        assert_eq!(
            classify_error(ctx, "f = kf.iscontain", &prompted, CandidateStatus::Timeout),
            ErrorClass::Invalid
        );
    }

    #[test]
    fn problem_validation() {
        let mut p = BenchmarkProblem {
            task_id: "t".into(),
            context: String::new(),
            test_code: "assert True".into(),
            oracle_api_ids: vec!["a".into()],
            difficulty_api_count: 1,
        };
        assert!(p.validate().is_ok());
        p.difficulty_api_count = 2;
        assert!(p.validate().is_err());
        p.difficulty_api_count = 1;
        p.test_code = " \n".into();
        assert!(p.validate().is_err());
    }
}
