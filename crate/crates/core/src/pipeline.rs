//! Vanilla and advanced retrieval-augmented answering.
//!
//! Vanilla: retrieve once, generate. Advanced: retrieve, ask the checker
//! whether the chunks are relevant, and while it answers IRRELEVANT with a
//! refined query, retrieve again with the refinement. At most
//! `max_refinements` refinements are followed, so there are at most
//! `1 + max_refinements` retrieval/check rounds. Generation always uses the
//! user's original question; refinements only steer retrieval.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbedError, Embedder};
use crate::llm::{
    chat_complete, check_relevance, language_name, ChatBackend, LlmConfig, LlmError, PromptSet,
    RelevanceVerdict, RenderedPrompt,
};
use crate::store::{RetrievalConfig, ScoredChunk, StoreError, VectorStore};

pub use crate::llm::PromptLanguage;

pub const MAX_QUERY_CHARS: usize = 4096;
pub const MAX_REFINEMENTS_LIMIT: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    Vanilla,
    #[default]
    Advanced,
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineMode::Vanilla => "vanilla",
            PipelineMode::Advanced => "advanced",
        })
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(PipelineMode::Vanilla),
            "advanced" => Ok(PipelineMode::Advanced),
            other => Err(format!("unknown pipeline {other:?} (expected vanilla or advanced)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub retrieval: RetrievalConfig,
    pub generator: LlmConfig,
    pub checker: LlmConfig,
    pub max_refinements: u32,
    pub prompt_language: PromptLanguage,
    /// Answer with a fixed refusal instead of generating when the
    /// refinement budget runs out.
    pub refuse_on_exhaustion: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: PipelineMode::Advanced,
            retrieval: RetrievalConfig::default(),
            generator: LlmConfig::generator(),
            checker: LlmConfig::checker(),
            max_refinements: 3,
            prompt_language: PromptLanguage::En,
            refuse_on_exhaustion: false,
        }
    }
}

impl PipelineConfig {
    pub fn with_mode(mut self, mode: PipelineMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_refinements > MAX_REFINEMENTS_LIMIT {
            return Err(PipelineError::InvalidConfig(format!(
                "max_refinements must be <= {MAX_REFINEMENTS_LIMIT}, got {}",
                self.max_refinements
            )));
        }
        self.retrieval
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        self.generator
            .validate()
            .map_err(|e| PipelineError::InvalidConfig(format!("generator: {e}")))?;
        if self.mode == PipelineMode::Advanced {
            self.checker
                .validate()
                .map_err(|e| PipelineError::InvalidConfig(format!("checker: {e}")))?;
        }
        Ok(())
    }

    /// Parses a TOML document whose keys mirror the struct fields. Unknown
    /// keys are rejected.
    pub fn from_toml(src: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(src).map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub corpus_id: String,
}

impl Query {
    pub fn new(text: impl Into<String>, corpus_id: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            corpus_id: corpus_id.into(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.text.trim().is_empty() {
            return Err(PipelineError::InvalidQuery("question must not be empty".into()));
        }
        let len = self.text.chars().count();
        if len > MAX_QUERY_CHARS {
            return Err(PipelineError::InvalidQuery(format!(
                "question has {len} characters; the limit is {MAX_QUERY_CHARS}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub query_used: String,
    pub retrieved: Vec<ScoredChunk>,
    pub verdict: Option<RelevanceVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagResult {
    pub answer: String,
    pub final_chunks: Vec<ScoredChunk>,
    pub trace: Vec<IterationTrace>,
    pub refinement_exhausted: bool,
    pub generator_prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Retrieval,
    RelevanceCheck,
    Generation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Stage {
    pub fn key(self) -> &'static str {
        match self {
            Stage::Retrieval => "retrieval",
            Stage::RelevanceCheck => "relevance_check",
            Stage::Generation => "generation",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("generation prompt needs at least one chunk")]
    NoChunks,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{stage} backend failed: {source}")]
    Backend {
        stage: Stage,
        #[source]
        source: BackendError,
        partial_trace: Vec<IterationTrace>,
    },
}

impl PipelineError {
    pub fn partial_trace(&self) -> &[IterationTrace] {
        match self {
            PipelineError::Backend { partial_trace, .. } => partial_trace,
            _ => &[],
        }
    }
}

/// Time source for stage timings.
pub trait Clock: Send + Sync {
    fn elapsed(&self) -> Duration;
}

#[derive(Debug)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}

/// A clock that never advances; every timing reads zero.
#[derive(Debug, Default, Clone, Copy)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

/// Wall time per stage in milliseconds, plus `total`.
pub type StageTimings = BTreeMap<String, f64>;

/// Renders the generator prompt for `query_text` over `chunks` (in order).
pub fn build_generation_prompt(
    prompts: &PromptSet,
    query_text: &str,
    chunks: &[ScoredChunk],
    language: PromptLanguage,
) -> Result<RenderedPrompt, PipelineError> {
    if chunks.is_empty() {
        return Err(PipelineError::NoChunks);
    }
    let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
    Ok(prompts
        .generator(language)
        .render(query_text, &texts, language_name(query_text, language)))
}

/// Fixed answer used when refinement is exhausted and refusal is enabled.
pub fn refusal_text(language: PromptLanguage) -> &'static str {
    match language {
        PromptLanguage::En => "The documents do not contain enough relevant information to answer this question.",
        PromptLanguage::Bn => "এই প্রশ্নের উত্তর দেওয়ার মতো যথেষ্ট প্রাসঙ্গিক তথ্য নথিতে নেই।",
    }
}

/// Everything a pipeline run needs, borrowed from the caller.
pub struct Pipeline<'a> {
    store: &'a VectorStore,
    embedder: &'a dyn Embedder,
    generator: &'a dyn ChatBackend,
    checker: Option<&'a dyn ChatBackend>,
    prompts: &'a PromptSet,
    clock: &'a dyn Clock,
}

static FROZEN: FrozenClock = FrozenClock;

struct Run<'p, 'a> {
    pipeline: &'p Pipeline<'a>,
    cfg: &'p PipelineConfig,
    timings: StageTimings,
    trace: Vec<IterationTrace>,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        store: &'a VectorStore,
        embedder: &'a dyn Embedder,
        generator: &'a dyn ChatBackend,
        prompts: &'a PromptSet,
    ) -> Self {
        Self {
            store,
            embedder,
            generator,
            checker: None,
            prompts,
            clock: &FROZEN,
        }
    }

    pub fn with_checker(mut self, checker: &'a dyn ChatBackend) -> Self {
        self.checker = Some(checker);
        self
    }

    pub fn with_clock(mut self, clock: &'a dyn Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Runs the pipeline selected by `cfg.mode`.
    pub fn answer(&self, q: &Query, cfg: &PipelineConfig) -> Result<RagResult, PipelineError> {
        self.answer_timed(q, cfg).0
    }

    pub fn answer_vanilla(&self, q: &Query, cfg: &PipelineConfig) -> Result<RagResult, PipelineError> {
        if cfg.mode != PipelineMode::Vanilla {
            return Err(PipelineError::InvalidConfig("answer_vanilla needs mode = vanilla".into()));
        }
        self.answer(q, cfg)
    }

    pub fn answer_advanced(&self, q: &Query, cfg: &PipelineConfig) -> Result<RagResult, PipelineError> {
        if cfg.mode != PipelineMode::Advanced {
            return Err(PipelineError::InvalidConfig("answer_advanced needs mode = advanced".into()));
        }
        self.answer(q, cfg)
    }

    /// Like [`Pipeline::answer`], also returning per-stage wall time.
    pub fn answer_timed(&self, q: &Query, cfg: &PipelineConfig) -> (Result<RagResult, PipelineError>, StageTimings) {
        let start = self.clock.elapsed();
        let mut run = Run {
            pipeline: self,
            cfg,
            timings: StageTimings::new(),
            trace: Vec::new(),
        };
        let result = run.execute(q);
        let mut timings = run.timings;
        timings.insert("total".into(), ms(self.clock.elapsed().saturating_sub(start)));
        (result, timings)
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

impl Run<'_, '_> {
    fn timed<T>(&mut self, stage: Stage, f: impl FnOnce(&Pipeline<'_>) -> T) -> T {
        let clock = self.pipeline.clock;
        let start = clock.elapsed();
        let out = f(self.pipeline);
        *self.timings.entry(stage.key().to_string()).or_insert(0.0) +=
            ms(clock.elapsed().saturating_sub(start));
        out
    }

    fn backend_error(&mut self, stage: Stage, source: BackendError) -> PipelineError {
        PipelineError::Backend {
            stage,
            source,
            partial_trace: std::mem::take(&mut self.trace),
        }
    }

    fn retrieve(&mut self, query: &str) -> Result<Vec<ScoredChunk>, PipelineError> {
        let retrieval = &self.cfg.retrieval;
        let out = self.timed(Stage::Retrieval, |p| {
            let qv = p.embedder.embed_one(query).map_err(|e| Err(BackendError::from(e)))?;
            p.store.retrieve(&qv, retrieval).map_err(Ok)
        });
        match out {
            Ok(chunks) => Ok(chunks),
            Err(Ok(store)) => Err(PipelineError::Store(store)),
            Err(Err(backend)) => Err(self.backend_error(Stage::Retrieval, backend)),
        }
    }

    fn check(&mut self, checker: &dyn ChatBackend, query: &str, chunks: &[ScoredChunk]) -> Result<RelevanceVerdict, BackendError> {
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let cfg = self.cfg;
        self.timed(Stage::RelevanceCheck, |p| {
            check_relevance(checker, &cfg.checker, p.prompts, cfg.prompt_language, query, &texts)
        })
        .map_err(Into::into)
    }

    fn execute(&mut self, q: &Query) -> Result<RagResult, PipelineError> {
        q.validate()?;
        self.cfg.validate()?;
        if self.pipeline.store.is_empty() {
            return Err(PipelineError::EmptyCorpus);
        }
        let checker = match self.cfg.mode {
            PipelineMode::Vanilla => None,
            PipelineMode::Advanced => Some(self.pipeline.checker.ok_or_else(|| {
                PipelineError::InvalidConfig("advanced mode needs a checker backend".into())
            })?),
        };

        let mut refinement_exhausted = false;
        match checker {
            None => {
                let retrieved = self.retrieve(&q.text)?;
                self.trace.push(IterationTrace {
                    iteration: 0,
                    query_used: q.text.clone(),
                    retrieved,
                    verdict: None,
                });
            }
            Some(checker) => {
                let mut current = q.text.clone();
                for iteration in 0..=self.cfg.max_refinements as usize {
                    let retrieved = self.retrieve(&current)?;
                    let verdict = match self.check(checker, &current, &retrieved) {
                        Ok(v) => v,
                        Err(e) => {
                            // keep the retrieval that the failed check was judging
                            self.trace.push(IterationTrace {
                                iteration,
                                query_used: current,
                                retrieved,
                                verdict: None,
                            });
                            return Err(self.backend_error(Stage::RelevanceCheck, e));
                        }
                    };
                    let next = verdict
                        .wants_refinement()
                        .then(|| verdict.refined_query.clone())
                        .flatten();
                    self.trace.push(IterationTrace {
                        iteration,
                        query_used: std::mem::take(&mut current),
                        retrieved,
                        verdict: Some(verdict),
                    });
                    match next {
                        None => break,
                        Some(_) if iteration == self.cfg.max_refinements as usize => {
                            refinement_exhausted = true;
                        }
                        Some(refined) => current = refined,
                    }
                }
            }
        }

        let final_chunks = self
            .trace
            .last()
            .map(|t| t.retrieved.clone())
            .unwrap_or_default();

        if refinement_exhausted && self.cfg.refuse_on_exhaustion {
            return Ok(RagResult {
                answer: refusal_text(self.cfg.prompt_language).to_string(),
                final_chunks,
                trace: std::mem::take(&mut self.trace),
                refinement_exhausted,
                generator_prompt: String::new(),
            });
        }

        let prompt = build_generation_prompt(
            self.pipeline.prompts,
            &q.text,
            &final_chunks,
            self.cfg.prompt_language,
        )?;
        let cfg = self.cfg;
        let answer = self
            .timed(Stage::Generation, |p| {
                chat_complete(p.generator, &cfg.generator, &prompt.system, &prompt.user)
            })
            .map_err(|e| self.backend_error(Stage::Generation, e.into()))?;

        Ok(RagResult {
            answer,
            final_chunks,
            trace: std::mem::take(&mut self.trace),
            refinement_exhausted,
            generator_prompt: prompt.user,
        })
    }
}
