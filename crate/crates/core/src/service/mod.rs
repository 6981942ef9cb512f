//! Request handling shared by the HTTP server, the CLI and the C ABI.
//!
//! Handlers return a status code plus a JSON body so every front end
//! reports errors the same way.

mod http;
pub mod cli;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{CorpusError, CorpusRegistry, IngestReport};
use crate::embedding::Embedder;
use crate::ingest::{ChunkConfig, DocumentMeta, LanguageHint};
use crate::llm::{ChatBackend, PromptSet, Verdict};
use crate::pipeline::{
    Clock, IterationTrace, Pipeline, PipelineConfig, PipelineError, PipelineMode, Query, RagResult,
    StageTimings, SystemClock, MAX_QUERY_CHARS,
};
use crate::store::ScoredChunk;

pub use http::{router, serve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub corpus_id: String,
    pub question: String,
    #[serde(default)]
    pub pipeline: PipelineMode,
    /// Partial pipeline configuration merged over the server defaults,
    /// e.g. `{"retrieval": {"top_k": 6}, "max_refinements": 1}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub query_used: String,
    pub verdict: Option<Verdict>,
    pub refined_query: Option<String>,
    pub parse_failed: bool,
    pub retrieved: Vec<String>,
}

impl From<&IterationTrace> for TraceEntry {
    fn from(t: &IterationTrace) -> Self {
        Self {
            iteration: t.iteration,
            query_used: t.query_used.clone(),
            verdict: t.verdict.as_ref().map(|v| v.verdict),
            refined_query: t.verdict.as_ref().and_then(|v| v.refined_query.clone()),
            parse_failed: t.verdict.as_ref().is_some_and(|v| v.parse_failed),
            retrieved: t.retrieved.iter().map(|c| c.chunk_id.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub answer: String,
    pub chunks: Vec<ScoredChunk>,
    pub trace: Vec<TraceEntry>,
    pub refinement_exhausted: bool,
    pub timings_ms: StageTimings,
}

impl QueryResponse {
    pub fn from_result(result: &RagResult, timings: StageTimings) -> Self {
        Self {
            answer: result.answer.clone(),
            chunks: result.final_chunks.clone(),
            trace: result.trace.iter().map(TraceEntry::from).collect(),
            refinement_exhausted: result.refinement_exhausted,
            timings_ms: timings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateCorpusRequest {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddDocumentRequest {
    pub doc_id: String,
    pub title: String,
    pub page_count: u32,
    #[serde(default = "default_hint")]
    pub language_hint: LanguageHint,
    pub text: String,
}

fn default_hint() -> LanguageHint {
    LanguageHint::Mixed
}

/// A failed request: HTTP status plus a machine-readable code.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    pub fields: BTreeMap<String, String>,
    pub partial_trace: Option<Vec<TraceEntry>>,
}

impl ServiceError {
    fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            fields: BTreeMap::new(),
            partial_trace: None,
        }
    }

    fn invalid(fields: BTreeMap<String, String>) -> Self {
        let message = fields
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            fields,
            ..Self::new(400, "invalid_request", message)
        }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        Self::invalid(BTreeMap::from([(field.to_string(), message.into())]))
    }

    pub fn body(&self) -> Value {
        let mut error = json!({ "code": self.code, "message": self.message });
        if !self.fields.is_empty() {
            error["fields"] = json!(self.fields);
        }
        if let Some(trace) = &self.partial_trace {
            error["partial_trace"] = json!(trace);
        }
        json!({ "error": error })
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.status, self.code, self.message)
    }
}

impl std::error::Error for ServiceError {}

impl From<CorpusError> for ServiceError {
    fn from(e: CorpusError) -> Self {
        match &e {
            CorpusError::UnknownCorpus(_) => Self::new(404, "unknown_corpus", e.to_string()),
            CorpusError::AlreadyExists(_) | CorpusError::DuplicateDocument(_) => {
                Self::new(409, "conflict", e.to_string())
            }
            CorpusError::InvalidId(_) | CorpusError::InvalidDocument(_) | CorpusError::EmptyDocument(_) => {
                Self::new(400, "invalid_request", e.to_string())
            }
            CorpusError::Embed(_) => Self::new(502, "backend_failure", e.to_string()),
            _ => Self::new(500, "internal", e.to_string()),
        }
    }
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::InvalidQuery(m) => Self::field("question", m.clone()),
            PipelineError::InvalidConfig(m) => Self::field("overrides", m.clone()),
            PipelineError::EmptyCorpus | PipelineError::NoChunks => {
                Self::new(409, "empty_corpus", e.to_string())
            }
            PipelineError::Store(_) => Self::new(500, "internal", e.to_string()),
            PipelineError::Backend { .. } => Self {
                partial_trace: Some(e.partial_trace().iter().map(TraceEntry::from).collect()),
                ..Self::new(502, "backend_failure", e.to_string())
            },
        }
    }
}

/// Long-lived state behind every front end.
pub struct Service {
    registry: Arc<CorpusRegistry>,
    embedder: Arc<dyn Embedder>,
    generator: Arc<dyn ChatBackend>,
    checker: Arc<dyn ChatBackend>,
    prompts: Arc<PromptSet>,
    clock: Arc<dyn Clock>,
    config: PipelineConfig,
    chunk_config: ChunkConfig,
}

impl Service {
    pub fn new(
        registry: Arc<CorpusRegistry>,
        embedder: Arc<dyn Embedder>,
        generator: Arc<dyn ChatBackend>,
        checker: Arc<dyn ChatBackend>,
        config: PipelineConfig,
    ) -> Self {
        Self {
            registry,
            embedder,
            generator,
            checker,
            prompts: Arc::new(PromptSet::default()),
            clock: Arc::new(SystemClock::default()),
            config,
            chunk_config: ChunkConfig::default(),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = Arc::new(prompts);
        self
    }

    pub fn with_chunk_config(mut self, cfg: ChunkConfig) -> Self {
        self.chunk_config = cfg;
        self
    }

    pub fn registry(&self) -> &CorpusRegistry {
        &self.registry
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// The server defaults with request overrides merged in.
    pub fn effective_config(&self, mode: PipelineMode, overrides: Option<&Value>) -> Result<PipelineConfig, ServiceError> {
        let mut cfg = match overrides {
            None | Some(Value::Null) => self.config.clone(),
            Some(Value::Object(patch)) => {
                for key in ["generator", "checker"] {
                    if let Some(Value::Object(inner)) = patch.get(key) {
                        if let Some(bad) = inner
                            .keys()
                            .find(|k| matches!(k.as_str(), "endpoint_url" | "backend" | "script_path"))
                        {
                            return Err(ServiceError::field(
                                "overrides",
                                format!("{key}.{bad} cannot be overridden per request"),
                            ));
                        }
                    }
                }
                let mut base = serde_json::to_value(&self.config).expect("config serializes");
                merge(&mut base, &Value::Object(patch.clone()));
                let mut merged: PipelineConfig = serde_json::from_value(base)
                    .map_err(|e| ServiceError::field("overrides", e.to_string()))?;
                merged.generator.api_key = self.config.generator.api_key.clone();
                merged.checker.api_key = self.config.checker.api_key.clone();
                merged
            }
            Some(_) => return Err(ServiceError::field("overrides", "must be a JSON object")),
        };
        cfg.mode = mode;
        cfg.validate().map_err(|e| ServiceError::field("overrides", e.to_string()))?;
        Ok(cfg)
    }

    pub fn query(&self, req: &QueryRequest) -> Result<QueryResponse, ServiceError> {
        let mut fields = BTreeMap::new();
        if req.corpus_id.trim().is_empty() {
            fields.insert("corpus_id".to_string(), "must not be empty".to_string());
        }
        if req.question.trim().is_empty() {
            fields.insert("question".to_string(), "must not be empty".to_string());
        } else {
            let len = req.question.chars().count();
            if len > MAX_QUERY_CHARS {
                fields.insert(
                    "question".to_string(),
                    format!("has {len} characters; the limit is {MAX_QUERY_CHARS}"),
                );
            }
        }
        if !fields.is_empty() {
            return Err(ServiceError::invalid(fields));
        }
        let cfg = self.effective_config(req.pipeline, req.overrides.as_ref())?;
        let handle = self
            .registry
            .get(&req.corpus_id)
            .ok_or_else(|| CorpusError::UnknownCorpus(req.corpus_id.clone()))?;
        let corpus = handle.read().expect("corpus lock poisoned");
        let pipeline = Pipeline::new(corpus.store(), self.embedder.as_ref(), self.generator.as_ref(), &self.prompts)
            .with_checker(self.checker.as_ref())
            .with_clock(self.clock.as_ref());
        let query = Query::new(req.question.clone(), req.corpus_id.clone());
        let (result, timings) = pipeline.answer_timed(&query, &cfg);
        let result = result?;
        Ok(QueryResponse::from_result(&result, timings))
    }

    /// Runs a query and returns `(status, body)`.
    pub fn handle_query(&self, req: &QueryRequest) -> (u16, Value) {
        respond(self.query(req))
    }

    /// Parses the raw request body first, so malformed JSON is a 400 too.
    pub fn handle_query_json(&self, body: &[u8]) -> (u16, Value) {
        match parse_body::<QueryRequest>(body) {
            Ok(req) => self.handle_query(&req),
            Err(e) => (e.status, e.body()),
        }
    }

    pub fn create_corpus(&self, req: &CreateCorpusRequest) -> Result<Value, ServiceError> {
        self.registry
            .create(&req.name, self.embedder.model_id(), self.embedder.dim())?;
        Ok(json!({
            "corpus_id": req.name,
            "model_id": self.embedder.model_id(),
            "dim": self.embedder.dim(),
        }))
    }

    pub fn add_document(&self, corpus_id: &str, req: AddDocumentRequest) -> Result<IngestReport, ServiceError> {
        if req.text.trim().is_empty() {
            return Err(ServiceError::field("text", "must not be empty"));
        }
        let meta = DocumentMeta {
            doc_id: req.doc_id,
            title: req.title,
            page_count: req.page_count,
            language_hint: req.language_hint,
            source_path: String::new(),
        };
        Ok(self
            .registry
            .ingest(corpus_id, meta, &req.text, &self.chunk_config, self.embedder.as_ref())?)
    }

    pub fn list_corpora(&self) -> Value {
        let corpora: Vec<Value> = self
            .registry
            .ids()
            .into_iter()
            .filter_map(|id| {
                let handle = self.registry.get(&id)?;
                let c = handle.read().expect("corpus lock poisoned");
                Some(json!({
                    "corpus_id": id,
                    "documents": c.documents().len(),
                    "chunks": c.store().len(),
                    "model_id": c.store().model_id(),
                    "dim": c.store().dim(),
                }))
            })
            .collect();
        json!({ "corpora": corpora })
    }

    pub fn health(&self) -> Value {
        json!({ "status": "ok", "version": crate::VERSION })
    }
}

/// Maps a handler result to `(status, body)`.
pub fn respond<T: Serialize>(result: Result<T, ServiceError>) -> (u16, Value) {
    match result {
        Ok(v) => (200, serde_json::to_value(v).expect("response serializes")),
        Err(e) => (e.status, e.body()),
    }
}

pub(crate) fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::field("body", e.to_string()))
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}
