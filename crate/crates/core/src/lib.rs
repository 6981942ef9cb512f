//! Bilingual (Bangla/English) retrieval-augmented question answering over
//! legal and regulatory document corpora.
//!
//! The crate provides two answering pipelines over the same corpus:
//!
//! * **vanilla**: retrieve the most relevant chunks (MMR or plain similarity)
//!   and hand them to a generator model together with the question;
//! * **advanced**: after each retrieval a checker model judges whether the
//!   chunks are relevant. If not, it proposes a refined query which drives
//!   the next retrieval, up to a configured number of refinements.
//!
//! Around the pipelines sit ingestion (OCR orchestration, recursive
//! splitting), embedding backends, an exact vector store, LLM gateways,
//! an evaluation harness and an HTTP service.

pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod ingest;
pub mod llm;
pub mod pipeline;
pub mod service;
pub mod store;
pub mod transport;

pub use corpus::{Corpus, CorpusError, CorpusRegistry, IngestReport};
pub use embedding::{
    cosine_similarity, embed_texts, mock_embed, EmbedError, Embedder, EmbedderBackend,
    EmbedderConfig, EmbeddingVector,
};
pub use ingest::{
    corpus_stats, preprocess_document, split_text, Chunk, ChunkConfig, ChunkDraft, DocumentMeta,
    IngestError, LanguageHint, StatsReport,
};
pub use llm::{
    check_relevance, parse_verdict, ChatBackend, LlmConfig, LlmError, LlmRole, RelevanceVerdict,
    ScriptedBackend, Verdict,
};
pub use pipeline::{
    IterationTrace, Pipeline, PipelineConfig, PipelineError, PipelineMode, PromptLanguage, Query,
    RagResult,
};
pub use store::{RetrievalConfig, RetrievalStrategy, ScoredChunk, StoreError, StoreRecord, VectorStore};

/// Version reported by the health endpoint and the C ABI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
