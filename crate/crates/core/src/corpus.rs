//! Named corpora: documents, their chunks, and the vector index over them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbedError, Embedder};
use crate::ingest::{split_text, Chunk, ChunkConfig, DocumentMeta, IngestError};
use crate::store::{StoreError, StoreRecord, VectorStore};

const DOCUMENTS_FILE: &str = "documents.jsonl";
const CHUNKS_FILE: &str = "chunks.jsonl";
const STORE_FILE: &str = "store.jsonl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid corpus id {0:?} (use letters, digits, '-' and '_')")]
    InvalidId(String),
    #[error("unknown corpus {0:?}")]
    UnknownCorpus(String),
    #[error("corpus {0:?} already exists")]
    AlreadyExists(String),
    #[error("document {0:?} is already in the corpus")]
    DuplicateDocument(String),
    #[error("invalid document metadata: {0}")]
    InvalidDocument(String),
    #[error("document {0:?} produced no chunks")]
    EmptyDocument(String),
    #[error("embedder {embedder:?} does not match corpus model {corpus:?}")]
    EmbedderMismatch { corpus: String, embedder: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("corrupt corpus directory: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub chunk_count: usize,
    pub chunk_ids: Vec<String>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    id: String,
    documents: Vec<DocumentMeta>,
    chunks: Vec<Chunk>,
    store: VectorStore,
}

impl Corpus {
    pub fn new(id: &str, model_id: &str, dim: usize) -> Result<Self, CorpusError> {
        if !valid_id(id) {
            return Err(CorpusError::InvalidId(id.to_string()));
        }
        Ok(Self {
            id: id.to_string(),
            documents: Vec::new(),
            chunks: Vec::new(),
            store: VectorStore::new(model_id, dim),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn documents(&self) -> &[DocumentMeta] {
        &self.documents
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    pub fn has_document(&self, doc_id: &str) -> bool {
        self.documents.iter().any(|d| d.doc_id == doc_id)
    }

    /// Splits, embeds and indexes one document. Nothing is stored unless
    /// every step succeeds.
    pub fn ingest_document(
        &mut self,
        meta: DocumentMeta,
        text: &str,
        cfg: &ChunkConfig,
        embedder: &dyn Embedder,
    ) -> Result<IngestReport, CorpusError> {
        meta.validate().map_err(CorpusError::InvalidDocument)?;
        if self.has_document(&meta.doc_id) {
            return Err(CorpusError::DuplicateDocument(meta.doc_id));
        }
        if embedder.model_id() != self.store.model_id() || embedder.dim() != self.store.dim() {
            return Err(CorpusError::EmbedderMismatch {
                corpus: format!("{}/{}", self.store.model_id(), self.store.dim()),
                embedder: format!("{}/{}", embedder.model_id(), embedder.dim()),
            });
        }
        let chunks: Vec<Chunk> = split_text(text, cfg)?
            .into_iter()
            .enumerate()
            .map(|(i, d)| Chunk::from_draft(&meta.doc_id, i, d))
            .collect();
        if chunks.is_empty() {
            return Err(CorpusError::EmptyDocument(meta.doc_id));
        }
        let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
        let vectors = embedder.embed(&texts)?;
        if vectors.len() != chunks.len() {
            return Err(EmbedError::MalformedResponse(format!(
                "expected {} vectors, got {}",
                chunks.len(),
                vectors.len()
            ))
            .into());
        }
        let records = chunks
            .iter()
            .zip(vectors)
            .map(|(c, embedding)| StoreRecord {
                chunk_id: c.chunk_id.clone(),
                doc_id: c.doc_id.clone(),
                text: c.text.clone(),
                embedding,
            })
            .collect();
        self.store.add_chunks(records)?;

        let report = IngestReport {
            chunk_count: chunks.len(),
            chunk_ids: chunks.iter().map(|c| c.chunk_id.clone()).collect(),
        };
        tracing::info!(corpus = %self.id, doc_id = %meta.doc_id, chunks = report.chunk_count, "ingested document");
        self.documents.push(meta);
        self.chunks.extend(chunks);
        Ok(report)
    }

    /// Writes the corpus into `dir` (documents, chunks and the store file).
    pub fn persist(&self, dir: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(dir)?;
        write_jsonl(&dir.join(DOCUMENTS_FILE), &self.documents)?;
        write_jsonl(&dir.join(CHUNKS_FILE), &self.chunks)?;
        self.store.persist(&dir.join(STORE_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .filter(|n| valid_id(n))
            .ok_or_else(|| CorpusError::InvalidId(dir.display().to_string()))?
            .to_string();
        let store = VectorStore::load(&dir.join(STORE_FILE))?;
        let documents: Vec<DocumentMeta> = read_jsonl(&dir.join(DOCUMENTS_FILE))?;
        let chunks: Vec<Chunk> = read_jsonl(&dir.join(CHUNKS_FILE))?;
        if chunks.len() != store.len() {
            return Err(CorpusError::Corrupt(format!(
                "{} chunks but {} store records",
                chunks.len(),
                store.len()
            )));
        }
        Ok(Self {
            id,
            documents,
            chunks,
            store,
        })
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    for item in items {
        writeln!(tmp, "{}", serde_json::to_string(item).expect("serializable"))?;
    }
    tmp.persist(path).map_err(|e| CorpusError::Io(e.error))?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let content = fs::read_to_string(path)?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CorpusError::Corrupt(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Shared, lock-protected set of corpora, optionally backed by a directory
/// (one subdirectory per corpus).
///
/// Each corpus sits behind its own reader–writer lock: many concurrent
/// queries, or one ingestion at a time.
#[derive(Debug, Default)]
pub struct CorpusRegistry {
    root: Option<PathBuf>,
    corpora: RwLock<BTreeMap<String, Arc<RwLock<Corpus>>>>,
}

impl CorpusRegistry {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `root`, loading every corpus subdirectory found there.
    pub fn open(root: &Path) -> Result<Self, CorpusError> {
        fs::create_dir_all(root)?;
        let mut corpora = BTreeMap::new();
        for entry in fs::read_dir(root)? {
            let path = entry?.path();
            if path.join(STORE_FILE).exists() {
                let corpus = Corpus::load(&path)?;
                corpora.insert(corpus.id().to_string(), Arc::new(RwLock::new(corpus)));
            }
        }
        Ok(Self {
            root: Some(root.to_path_buf()),
            corpora: RwLock::new(corpora),
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn create(&self, id: &str, model_id: &str, dim: usize) -> Result<Arc<RwLock<Corpus>>, CorpusError> {
        let corpus = Corpus::new(id, model_id, dim)?;
        let mut map = self.corpora.write().expect("registry lock poisoned");
        if map.contains_key(id) {
            return Err(CorpusError::AlreadyExists(id.to_string()));
        }
        if let Some(root) = &self.root {
            corpus.persist(&root.join(id))?;
        }
        let handle = Arc::new(RwLock::new(corpus));
        map.insert(id.to_string(), Arc::clone(&handle));
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Option<Arc<RwLock<Corpus>>> {
        self.corpora.read().expect("registry lock poisoned").get(id).cloned()
    }

    pub fn insert(&self, corpus: Corpus) -> Result<(), CorpusError> {
        let mut map = self.corpora.write().expect("registry lock poisoned");
        if map.contains_key(corpus.id()) {
            return Err(CorpusError::AlreadyExists(corpus.id().to_string()));
        }
        map.insert(corpus.id().to_string(), Arc::new(RwLock::new(corpus)));
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.corpora.read().expect("registry lock poisoned").keys().cloned().collect()
    }

    /// Ingests under the corpus write lock and persists on success.
    pub fn ingest(
        &self,
        id: &str,
        meta: DocumentMeta,
        text: &str,
        cfg: &ChunkConfig,
        embedder: &dyn Embedder,
    ) -> Result<IngestReport, CorpusError> {
        let handle = self.get(id).ok_or_else(|| CorpusError::UnknownCorpus(id.to_string()))?;
        let mut corpus = handle.write().expect("corpus lock poisoned");
        let mut staged = corpus.clone();
        let report = staged.ingest_document(meta, text, cfg, embedder)?;
        if let Some(root) = &self.root {
            staged.persist(&root.join(id))?;
        }
        *corpus = staged;
        Ok(report)
    }
}
