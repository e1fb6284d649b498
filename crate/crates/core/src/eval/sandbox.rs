//! Runs one candidate program in a child process with a wall-clock limit.
//!
//! Isolation is a fresh temp directory and a separate process only; there is
//! no syscall filtering or resource limiting beyond the timeout.

use std::fs;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BenchmarkProblem, EvalError};

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_INTERPRETER: &str = "python3 {file}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxConfig {
    pub timeout_ms: u64,
    /// Whitespace-separated argv; `{file}` is replaced by the program path.
    pub interpreter_cmd: String,
    pub file_name: String,
    /// Parallel candidate executions. Zero means one per CPU.
    pub workers: usize,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            timeout_ms: DEFAULT_TIMEOUT_MS,
            interpreter_cmd: DEFAULT_INTERPRETER.into(),
            file_name: "candidate.py".into(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Pass,
    Fail,
    Timeout,
    Crash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub task_id: String,
    pub sample_index: usize,
    pub status: CandidateStatus,
    pub wall_ms: u64,
}

impl SandboxConfig {
    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    pub fn argv(&self, file: &Path) -> Result<Vec<String>, EvalError> {
        let parts: Vec<&str> = self.interpreter_cmd.split_whitespace().collect();
        if parts.is_empty() {
            return Err(EvalError::Setup("interpreter command is empty".into()));
        }
        if !parts.iter().any(|p| p.contains("{file}")) {
            return Err(EvalError::Setup(format!(
                "interpreter command {:?} has no {{file}} placeholder",
                self.interpreter_cmd
            )));
        }
        let file = file.to_string_lossy();
        Ok(parts.iter().map(|p| p.replace("{file}", &file)).collect())
    }

    /// Confirms the interpreter can be started at all, so that a missing
    /// binary is reported once instead of as a crash per candidate.
    pub fn check(&self) -> Result<(), EvalError> {
        if self.timeout_ms == 0 {
            return Err(EvalError::Setup("timeout must be positive".into()));
        }
        let dir = tempfile::tempdir().map_err(|e| EvalError::Setup(format!("temp dir: {e}")))?;
        let file = dir.path().join(&self.file_name);
        fs::write(&file, "").map_err(|e| EvalError::Setup(e.to_string()))?;
        let argv = self.argv(&file)?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .current_dir(dir.path())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EvalError::Setup(format!("cannot start {:?}: {e}", argv[0])))?;
        let _ = child.wait();
        Ok(())
    }
}

pub fn program_text(problem: &BenchmarkProblem, completion: &str) -> String {
    format!("{}{}\n{}", problem.context, completion, problem.test_code)
}

/// Writes context + completion + tests to a temp file and runs it. Exit
/// code 0 is a pass, any other exit code a failure; a process that cannot
/// be started or ends by signal is a crash.
pub fn run_candidate(
    problem: &BenchmarkProblem,
    sample_index: usize,
    completion: &str,
    config: &SandboxConfig,
) -> Result<CandidateResult, EvalError> {
    let dir = tempfile::tempdir().map_err(|e| EvalError::Setup(format!("temp dir: {e}")))?;
    let file = dir.path().join(&config.file_name);
    fs::write(&file, program_text(problem, completion)).map_err(|e| EvalError::Setup(e.to_string()))?;
    let argv = config.argv(&file)?;
    let limit = Duration::from_millis(config.timeout_ms);

    let start = Instant::now();
    let spawned = Command::new(&argv[0])
        .args(&argv[1..])
        .current_dir(dir.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn();
    let status = match spawned {
        Err(_) => CandidateStatus::Crash,
        Ok(mut child) => loop {
            match child.try_wait() {
                Ok(Some(exit)) => {
                    break match exit.code() {
                        Some(0) => CandidateStatus::Pass,
                        Some(_) => CandidateStatus::Fail,
                        None => CandidateStatus::Crash,
                    };
                }
                Ok(None) => {
                    let elapsed = start.elapsed();
                    if elapsed >= limit {
                        let _ = child.kill();
                        let _ = child.wait();
                        break CandidateStatus::Timeout;
                    }
                    thread::sleep((limit - elapsed).min(Duration::from_millis(5)));
                }
                Err(_) => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break CandidateStatus::Crash;
                }
            }
        },
    };
    Ok(CandidateResult {
        task_id: problem.task_id.clone(),
        sample_index,
        status,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}
