//! Document ingestion: OCR orchestration, recursive splitting, manifests
//! and corpus statistics.

mod manifest;
mod ocr;
mod splitter;
mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{load_manifest, parse_manifest};
pub use ocr::{preprocess_document, PAGE_SEPARATOR};
pub use splitter::split_text;
pub use stats::{corpus_stats, StatsReport};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("source file not found: {0}")]
    MissingFile(String),
    #[error("OCR command template must contain {{input}} and {{output}}: {0:?}")]
    InvalidTemplate(String),
    #[error("OCR command failed on page {page} (exit status {status}): {stderr}")]
    OcrFailed {
        page: usize,
        status: String,
        stderr: String,
    },
    #[error("OCR produced no text for any page of {0}")]
    EmptyOcrOutput(String),
    #[error("invalid chunk configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot compute statistics over an empty document list")]
    EmptyDocumentList,
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate doc_id {doc_id:?} on manifest lines {first} and {second}")]
    DuplicateDocId {
        doc_id: String,
        first: usize,
        second: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageHint {
    Bn,
    En,
    Mixed,
}

/// Metadata for one source document. Manifest files hold one of these per
/// line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentMeta {
    pub doc_id: String,
    pub title: String,
    pub page_count: u32,
    pub language_hint: LanguageHint,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_path: String,
}

impl DocumentMeta {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, page_count: u32) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            page_count,
            language_hint: LanguageHint::Mixed,
            source_path: String::new(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.doc_id.trim().is_empty() {
            return Err("doc_id must not be empty".into());
        }
        if self.page_count == 0 {
            return Err("page_count must be >= 1".into());
        }
        Ok(())
    }
}

/// Recursive splitter settings. Sizes are counted in Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkConfig {
    pub chunk_size: usize,
    pub chunk_overlap: usize,
    /// Highest priority first; must end with `""` (per-character fallback).
    pub separators: Vec<String>,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_size: 1000,
            chunk_overlap: 150,
            separators: ["\n\n", "\n", "।", ". ", " ", ""]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl ChunkConfig {
    pub fn new(chunk_size: usize, chunk_overlap: usize, separators: &[&str]) -> Result<Self, IngestError> {
        let cfg = Self {
            chunk_size,
            chunk_overlap,
            separators: separators.iter().map(|s| s.to_string()).collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.chunk_size == 0 {
            return Err(IngestError::InvalidConfig("chunk_size must be positive".into()));
        }
        if self.chunk_overlap >= self.chunk_size {
            return Err(IngestError::InvalidConfig(format!(
                "chunk_overlap ({}) must be smaller than chunk_size ({})",
                self.chunk_overlap, self.chunk_size
            )));
        }
        if self.separators.last().map(String::as_str) != Some("") {
            return Err(IngestError::InvalidConfig(
                "separators must end with the empty string".into(),
            ));
        }
        Ok(())
    }
}

/// Splitter output before ids are assigned. `char_span` is a half-open
/// range of scalar-value offsets into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkDraft {
    pub text: String,
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub char_span: (usize, usize),
}

impl Chunk {
    pub fn from_draft(doc_id: &str, index: usize, draft: ChunkDraft) -> Self {
        Self {
            chunk_id: chunk_id(doc_id, index),
            doc_id: doc_id.to_string(),
            index,
            text: draft.text,
            char_span: draft.char_span,
        }
    }
}

pub fn chunk_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index:04}")
}
