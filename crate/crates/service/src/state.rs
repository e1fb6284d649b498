use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use privcode_core::eval::{EvaluationReport, SandboxConfig};
use privcode_core::generation::CompletionModel;
use privcode_core::prompt::HumanChoice;
use privcode_core::retriever::{ApiIndex, EncoderParams};
use privcode_core::DocCatalog;
use serde::Serialize;
use tokio::sync::Semaphore;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(3600);

/// Everything the handlers share. Catalog, params and index never change
/// after startup.
pub struct AppState {
    pub catalog: Arc<DocCatalog>,
    pub retriever: Option<(Arc<EncoderParams>, Arc<ApiIndex>)>,
    pub model: Option<Arc<dyn CompletionModel>>,
    pub data_dir: PathBuf,
    pub sandbox: SandboxConfig,
    pub session_ttl: Duration,
    pub(crate) sessions: Mutex<HashMap<String, Session>>,
    pub(crate) jobs: Mutex<HashMap<String, Job>>,
    /// One evaluation at a time; later jobs wait here.
    pub(crate) eval_slot: Arc<Semaphore>,
}

impl AppState {
    pub fn new(catalog: DocCatalog, data_dir: impl Into<PathBuf>) -> Self {
        AppState {
            catalog: Arc::new(catalog),
            retriever: None,
            model: None,
            data_dir: data_dir.into(),
            sandbox: SandboxConfig::default(),
            session_ttl: DEFAULT_SESSION_TTL,
            sessions: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
            eval_slot: Arc::new(Semaphore::new(1)),
        }
    }

    pub fn with_retriever(mut self, params: EncoderParams, index: ApiIndex) -> Self {
        self.retriever = Some((Arc::new(params), Arc::new(index)));
        self
    }

    pub fn with_model(mut self, model: Arc<dyn CompletionModel>) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_sandbox(mut self, sandbox: SandboxConfig) -> Self {
        self.sandbox = sandbox;
        self
    }

    pub fn with_session_ttl(mut self, ttl: Duration) -> Self {
        self.session_ttl = ttl;
        self
    }

    /// Resolves a client-supplied artifact name inside the data directory.
    /// Absolute paths and `..` are refused.
    pub(crate) fn data_path(&self, reference: &str) -> Option<PathBuf> {
        let rel = Path::new(reference);
        let safe = !reference.is_empty()
            && rel
                .components()
                .all(|c| matches!(c, Component::Normal(_) | Component::CurDir));
        safe.then(|| self.data_dir.join(rel))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub api_id: String,
    pub name: String,
    pub first_sentence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub session_id: String,
    pub query: String,
    pub top5: Vec<Candidate>,
    pub choice: Option<HumanChoice>,
    pub resolved_api_ids: Option<Vec<String>>,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    #[serde(skip)]
    pub(crate) born: Instant,
}

impl Session {
    pub(crate) fn new(session_id: String, query: String, top5: Vec<Candidate>) -> Self {
        Session {
            session_id,
            query,
            top5,
            choice: None,
            resolved_api_ids: None,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            born: Instant::now(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub job_id: String,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<EvaluationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}
