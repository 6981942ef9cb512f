//! Exact in-memory vector store with cosine top-k search, MMR selection,
//! and a checksummed line-delimited file format.
//!
//! Search always scans every record; there is no approximate index. Ties are
//! broken by ascending `chunk_id`, so results are reproducible.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embedding::{raw_cosine, EmbedError, EmbeddingVector};

pub const STORE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("duplicate chunk_id {0:?}")]
    DuplicateId(String),
    #[error("dimension mismatch: store has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model mismatch: store has {expected:?}, got {got:?}")]
    ModelMismatch { expected: String, got: String },
    #[error("invalid vector: {0}")]
    InvalidVector(#[from] EmbedError),
    #[error("invalid retrieval configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported store format version {found} (expected {STORE_FORMAT_VERSION})")]
    VersionMismatch { found: u64 },
    #[error("corrupt store file: {0}")]
    Corrupt(String),
    #[error("store file not found: {0}")]
    Missing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
    pub embedding: EmbeddingVector,
}

/// A search hit. `score` is the cosine similarity to the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalStrategy {
    Similarity,
    #[default]
    Mmr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalConfig {
    pub top_k: usize,
    pub fetch_k: usize,
    pub mmr_lambda: f64,
    #[serde(default)]
    pub strategy: RetrievalStrategy,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self::with_top_k(4)
    }
}

impl RetrievalConfig {
    /// Defaults for a given `top_k`: `fetch_k = max(4·top_k, 20)`, λ = 0.5, MMR.
    pub fn with_top_k(top_k: usize) -> Self {
        Self {
            top_k,
            fetch_k: default_fetch_k(top_k),
            mmr_lambda: 0.5,
            strategy: RetrievalStrategy::Mmr,
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.top_k == 0 {
            return Err(StoreError::InvalidConfig("top_k must be positive".into()));
        }
        if self.fetch_k < self.top_k {
            return Err(StoreError::InvalidConfig(format!(
                "fetch_k ({}) must be >= top_k ({})",
                self.fetch_k, self.top_k
            )));
        }
        if !(0.0..=1.0).contains(&self.mmr_lambda) {
            return Err(StoreError::InvalidConfig(format!(
                "mmr_lambda must lie in [0, 1], got {}",
                self.mmr_lambda
            )));
        }
        Ok(())
    }
}

pub fn default_fetch_k(top_k: usize) -> usize {
    (4 * top_k).max(20)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    model_id: String,
    dim: usize,
    records: Vec<StoreRecord>,
    norms: Vec<f64>,
    ids: HashSet<String>,
}

impl VectorStore {
    pub fn new(model_id: impl Into<String>, dim: usize) -> Self {
        Self {
            model_id: model_id.into(),
            dim,
            records: Vec::new(),
            norms: Vec::new(),
            ids: HashSet::new(),
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[StoreRecord] {
        &self.records
    }

    pub fn get(&self, chunk_id: &str) -> Option<&StoreRecord> {
        self.records.iter().find(|r| r.chunk_id == chunk_id)
    }

    fn check_vector(&self, v: &EmbeddingVector) -> Result<(), StoreError> {
        if v.dim() != self.dim {
            return Err(StoreError::DimensionMismatch {
                expected: self.dim,
                got: v.dim(),
            });
        }
        if v.model_id != self.model_id {
            return Err(StoreError::ModelMismatch {
                expected: self.model_id.clone(),
                got: v.model_id.clone(),
            });
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite.into());
        }
        if v.norm() == 0.0 {
            return Err(EmbedError::ZeroNorm.into());
        }
        Ok(())
    }

    /// Adds a batch atomically: either every record is added or none is.
    pub fn add_chunks(&mut self, records: Vec<StoreRecord>) -> Result<usize, StoreError> {
        let mut batch_ids = HashSet::with_capacity(records.len());
        for r in &records {
            self.check_vector(&r.embedding)?;
            if self.ids.contains(&r.chunk_id) || !batch_ids.insert(r.chunk_id.as_str()) {
                return Err(StoreError::DuplicateId(r.chunk_id.clone()));
            }
        }
        let added = records.len();
        for r in records {
            self.norms.push(r.embedding.norm());
            self.ids.insert(r.chunk_id.clone());
            self.records.push(r);
        }
        Ok(added)
    }

    fn query_scores(&self, query: &EmbeddingVector) -> Result<Vec<f64>, StoreError> {
        self.check_vector(query)?;
        let qn = query.norm();
        Ok(self
            .records
            .iter()
            .zip(&self.norms)
            .map(|(r, &n)| raw_cosine(&query.values, &r.embedding.values, qn * n))
            .collect())
    }

    /// Record indices ordered by descending score, ties by ascending chunk_id.
    fn ranked(&self, scores: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.sort_by(|&a, &b| self.rank_cmp(a, scores[a], b, scores[b]));
        order
    }

    fn rank_cmp(&self, a: usize, sa: f64, b: usize, sb: f64) -> Ordering {
        sb.total_cmp(&sa)
            .then_with(|| self.records[a].chunk_id.cmp(&self.records[b].chunk_id))
    }

    fn scored(&self, idx: usize, score: f64) -> ScoredChunk {
        let r = &self.records[idx];
        ScoredChunk {
            chunk_id: r.chunk_id.clone(),
            doc_id: r.doc_id.clone(),
            text: r.text.clone(),
            score,
        }
    }

    /// Exact top-k by cosine similarity; returns `min(k, len)` hits.
    pub fn top_k_by_similarity(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<ScoredChunk>, StoreError> {
        let scores = self.query_scores(query)?;
        Ok(self
            .ranked(&scores)
            .into_iter()
            .take(k)
            .map(|i| self.scored(i, scores[i]))
            .collect())
    }

    /// Maximal marginal relevance selection over the `fetch_k` most similar
    /// records.
    ///
    /// The most query-similar candidate is taken first; each further pick
    /// maximizes `λ·sim(q, d) − (1 − λ)·max_{s ∈ selected} sim(d, s)`.
    /// Reported scores are `sim(q, d)`.
    pub fn mmr_select(
        &self,
        query: &EmbeddingVector,
        cfg: &RetrievalConfig,
    ) -> Result<Vec<ScoredChunk>, StoreError> {
        cfg.validate()?;
        let scores = self.query_scores(query)?;
        let candidates: Vec<usize> = self.ranked(&scores).into_iter().take(cfg.fetch_k).collect();
        let want = cfg.top_k.min(candidates.len());
        if want == 0 {
            return Ok(Vec::new());
        }

        let lambda = cfg.mmr_lambda;
        let mut remaining: Vec<usize> = candidates[1..].to_vec();
        let mut selected = vec![candidates[0]];
        // max similarity of each remaining candidate to the selected set
        let mut redundancy: Vec<f64> = remaining
            .iter()
            .map(|&d| self.pair_similarity(d, candidates[0]))
            .collect();

        while selected.len() < want {
            let mut best = 0;
            let mut best_value = f64::NEG_INFINITY;
            for (pos, &d) in remaining.iter().enumerate() {
                let value = lambda * scores[d] - (1.0 - lambda) * redundancy[pos];
                let better = match value.total_cmp(&best_value) {
                    Ordering::Greater => true,
                    Ordering::Equal => {
                        self.records[d].chunk_id < self.records[remaining[best]].chunk_id
                    }
                    Ordering::Less => false,
                };
                if better {
                    best = pos;
                    best_value = value;
                }
            }
            let pick = remaining.swap_remove(best);
            redundancy.swap_remove(best);
            for (pos, &d) in remaining.iter().enumerate() {
                redundancy[pos] = redundancy[pos].max(self.pair_similarity(d, pick));
            }
            selected.push(pick);
        }
        Ok(selected.into_iter().map(|i| self.scored(i, scores[i])).collect())
    }

    fn pair_similarity(&self, a: usize, b: usize) -> f64 {
        raw_cosine(
            &self.records[a].embedding.values,
            &self.records[b].embedding.values,
            self.norms[a] * self.norms[b],
        )
    }

    /// Runs the retrieval strategy named in `cfg`.
    pub fn retrieve(
        &self,
        query: &EmbeddingVector,
        cfg: &RetrievalConfig,
    ) -> Result<Vec<ScoredChunk>, StoreError> {
        match cfg.strategy {
            RetrievalStrategy::Mmr => self.mmr_select(query, cfg),
            RetrievalStrategy::Similarity => {
                cfg.validate()?;
                self.top_k_by_similarity(query, cfg.top_k)
            }
        }
    }

    /// Writes the store as a header line followed by one record per line.
    /// The file is written to a sibling temp file and renamed into place.
    pub fn persist(&self, path: &Path) -> Result<(), StoreError> {
        let mut body = String::new();
        for r in &self.records {
            let line = FileRecord {
                chunk_id: r.chunk_id.clone(),
                doc_id: r.doc_id.clone(),
                text: r.text.clone(),
                embedding: r.embedding.values.iter().map(|v| format_f64(*v)).collect(),
            };
            body.push_str(&serde_json::to_string(&line).expect("record serializes"));
            body.push('\n');
        }
        let header = FileHeader {
            format_version: STORE_FORMAT_VERSION,
            dim: self.dim,
            model_id: self.model_id.clone(),
            record_count: self.records.len(),
            checksum: checksum(body.as_bytes()),
        };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        writeln!(tmp, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        tmp.write_all(body.as_bytes())?;
        tmp.flush()?;
        tmp.persist(path).map_err(|e| StoreError::Io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        let bytes = match fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::Missing(path.display().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let content = String::from_utf8(bytes).map_err(|_| StoreError::Corrupt("not UTF-8".into()))?;
        Self::parse(&content)
    }

    fn parse(content: &str) -> Result<Self, StoreError> {
        let (header_line, body) = content
            .split_once('\n')
            .ok_or_else(|| StoreError::Corrupt("missing header line".into()))?;
        let raw: serde_json::Value = serde_json::from_str(header_line)
            .map_err(|e| StoreError::Corrupt(format!("header: {e}")))?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| StoreError::Corrupt("header lacks format_version".into()))?;
        if version != u64::from(STORE_FORMAT_VERSION) {
            return Err(StoreError::VersionMismatch { found: version });
        }
        let header: FileHeader =
            serde_json::from_value(raw).map_err(|e| StoreError::Corrupt(format!("header: {e}")))?;
        if checksum(body.as_bytes()) != header.checksum {
            return Err(StoreError::Corrupt("checksum mismatch".into()));
        }

        let mut store = Self::new(header.model_id, header.dim);
        let mut records = Vec::with_capacity(header.record_count);
        for (i, line) in body.lines().enumerate() {
            let rec: FileRecord = serde_json::from_str(line)
                .map_err(|e| StoreError::Corrupt(format!("record {}: {e}", i + 1)))?;
            let values = rec
                .embedding
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| StoreError::Corrupt(format!("record {}: {e}", i + 1)))?;
            records.push(StoreRecord {
                chunk_id: rec.chunk_id,
                doc_id: rec.doc_id,
                text: rec.text,
                embedding: EmbeddingVector {
                    model_id: store.model_id.clone(),
                    values,
                },
            });
        }
        if records.len() != header.record_count {
            return Err(StoreError::Corrupt(format!(
                "header announces {} records, found {}",
                header.record_count,
                records.len()
            )));
        }
        store.add_chunks(records)?;
        Ok(store)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHeader {
    format_version: u32,
    dim: usize,
    model_id: String,
    record_count: usize,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRecord {
    chunk_id: String,
    doc_id: String,
    text: String,
    embedding: Vec<String>,
}

/// Seventeen significant digits: enough to round-trip any f64.
fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn checksum(body: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(body)))
}
