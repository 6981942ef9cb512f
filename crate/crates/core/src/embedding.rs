//! Embedding vectors, embedding backends, and cosine similarity.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::transport::{HttpTransport, RetryPolicy, Transport, TransportError};

/// Model id stamped on vectors produced by [`mock_embed`].
pub const MOCK_MODEL_ID: &str = "mock-trigram";
/// Seed for the trigram feature hash used by the mock embedder.
pub const MOCK_HASH_SEED: u64 = 0x5EED;
/// Smallest dimensionality the mock embedder accepts.
pub const MOCK_MIN_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("input text at position {index} is empty")]
    EmptyText { index: usize },
    #[error("invalid embedder configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("model mismatch: {left} vs {right}")]
    ModelMismatch { left: String, right: String },
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("malformed embedding response: {0}")]
    MalformedResponse(String),
    #[error("embedding backend failed: {0}")]
    Transport(#[from] TransportError),
}

/// A dense embedding tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub model_id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    /// Builds a vector, rejecting empty, non-finite, or zero-norm input.
    pub fn new(model_id: impl Into<String>, values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let v = Self {
            model_id: model_id.into(),
            values,
        };
        if v.norm() == 0.0 {
            return Err(EmbedError::ZeroNorm);
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Returns a copy with every component multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            model_id: self.model_id.clone(),
            values: self.values.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<(), EmbedError> {
        if self.dim() != other.dim() {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        if self.model_id != other.model_id {
            return Err(EmbedError::ModelMismatch {
                left: self.model_id.clone(),
                right: other.model_id.clone(),
            });
        }
        Ok(())
    }
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
///
/// Both vectors must come from the same model and have the same length.
/// A zero-norm input is an error rather than a similarity of zero.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbedError> {
    u.ensure_compatible(v)?;
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(raw_cosine(&u.values, &v.values, nu * nv))
}

/// Cosine with a precomputed norm product. Callers guarantee equal lengths.
pub(crate) fn raw_cosine(a: &[f64], b: &[f64], norm_product: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / norm_product).clamp(-1.0, 1.0)
}

/// Deterministic test-double embedding.
///
/// The NFC-normalized text is cut into character trigrams (texts shorter than
/// three scalars form a single gram). Each gram is hashed with XXH64 seeded
/// with [`MOCK_HASH_SEED`] and counted into bucket `hash % dim`; the counts
/// are then L2-normalized. Works identically for Bangla and English because
/// no word segmentation is involved.
pub fn mock_embed(text: &str, dim: usize) -> Result<EmbeddingVector, EmbedError> {
    if text.is_empty() {
        return Err(EmbedError::EmptyText { index: 0 });
    }
    if dim < MOCK_MIN_DIM {
        return Err(EmbedError::InvalidConfig(format!(
            "mock embedder needs dim >= {MOCK_MIN_DIM}, got {dim}"
        )));
    }
    let normalized: String = text.nfc().collect();
    let bounds: Vec<usize> = normalized
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(normalized.len()))
        .collect();
    let scalars = bounds.len() - 1;

    let mut counts = vec![0.0f64; dim];
    let mut bump = |gram: &str| {
        let h = xxhash_rust::xxh64::xxh64(gram.as_bytes(), MOCK_HASH_SEED);
        counts[(h % dim as u64) as usize] += 1.0;
    };
    if scalars < 3 {
        bump(&normalized);
    } else {
        for i in 0..scalars - 2 {
            bump(&normalized[bounds[i]..bounds[i + 3]]);
        }
    }
    let norm = counts.iter().map(|x| x * x).sum::<f64>().sqrt();
    let values = counts.into_iter().map(|x| x / norm).collect();
    EmbeddingVector::new(MOCK_MODEL_ID, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderBackend {
    Http,
    #[default]
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderConfig {
    #[serde(default)]
    pub backend: EmbedderBackend,
    #[serde(default)]
    pub endpoint_url: String,
    pub model_id: String,
    pub dim: usize,
    #[serde(default = "default_embed_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Bearer token; only ever read from the environment.
    #[serde(skip)]
    pub api_key: Option<String>,
}

fn default_embed_timeout_ms() -> u64 {
    30_000
}
fn default_batch_size() -> usize {
    32
}
fn default_max_in_flight() -> usize {
    4
}

impl EmbedderConfig {
    pub fn mock(dim: usize) -> Self {
        Self {
            backend: EmbedderBackend::Mock,
            endpoint_url: String::new(),
            model_id: MOCK_MODEL_ID.to_string(),
            dim,
            timeout_ms: default_embed_timeout_ms(),
            batch_size: default_batch_size(),
            max_in_flight: default_max_in_flight(),
            api_key: None,
        }
    }

    pub fn http(endpoint_url: impl Into<String>, model_id: impl Into<String>, dim: usize) -> Self {
        Self {
            backend: EmbedderBackend::Http,
            endpoint_url: endpoint_url.into(),
            model_id: model_id.into(),
            ..Self::mock(dim)
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidConfig("dim must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(EmbedError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(EmbedError::InvalidConfig("max_in_flight must be >= 1".into()));
        }
        match self.backend {
            EmbedderBackend::Mock if self.dim < MOCK_MIN_DIM => Err(EmbedError::InvalidConfig(
                format!("mock embedder needs dim >= {MOCK_MIN_DIM}"),
            )),
            EmbedderBackend::Http if self.endpoint_url.is_empty() => Err(
                EmbedError::InvalidConfig("http embedder needs an endpoint_url".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Instantiates the configured backend over a real HTTP transport.
    pub fn build(&self) -> Result<Arc<dyn Embedder>, EmbedError> {
        self.build_with_transport(Arc::new(HttpTransport::default()))
    }

    pub fn build_with_transport(
        &self,
        transport: Arc<dyn Transport>,
    ) -> Result<Arc<dyn Embedder>, EmbedError> {
        self.validate()?;
        Ok(match self.backend {
            EmbedderBackend::Mock => Arc::new(MockEmbedder::new(&self.model_id, self.dim)?),
            EmbedderBackend::Http => Arc::new(HttpEmbedder::new(self.clone(), transport)?),
        })
    }
}

/// Anything that can turn texts into embedding vectors.
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;
    fn dim(&self) -> usize;
    /// Output has the same length and order as `texts`.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed(&[text.to_string()])?;
        out.pop()
            .ok_or_else(|| EmbedError::MalformedResponse("no vector returned".into()))
    }
}

fn reject_empty(texts: &[String]) -> Result<(), EmbedError> {
    match texts.iter().position(|t| t.is_empty()) {
        Some(index) => Err(EmbedError::EmptyText { index }),
        None => Ok(()),
    }
}

/// Embeds `texts` with the backend described by `cfg`.
pub fn embed_texts(texts: &[String], cfg: &EmbedderConfig) -> Result<Vec<EmbeddingVector>, EmbedError> {
    cfg.build()?.embed(texts)
}

#[derive(Debug, Clone)]
pub struct MockEmbedder {
    model_id: String,
    dim: usize,
}

impl MockEmbedder {
    pub fn new(model_id: impl Into<String>, dim: usize) -> Result<Self, EmbedError> {
        if dim < MOCK_MIN_DIM {
            return Err(EmbedError::InvalidConfig(format!(
                "mock embedder needs dim >= {MOCK_MIN_DIM}, got {dim}"
            )));
        }
        Ok(Self {
            model_id: model_id.into(),
            dim,
        })
    }
}

impl Embedder for MockEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        reject_empty(texts)?;
        texts
            .iter()
            .map(|t| {
                let mut v = mock_embed(t, self.dim)?;
                v.model_id.clone_from(&self.model_id);
                Ok(v)
            })
            .collect()
    }
}

/// Client for the generic embedding protocol:
/// `POST {"model", "input": [..]}` → `{"data": [{"index", "embedding"}]}`.
pub struct HttpEmbedder {
    cfg: EmbedderConfig,
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for HttpEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpEmbedder")
            .field("endpoint_url", &self.cfg.endpoint_url)
            .field("model_id", &self.cfg.model_id)
            .field("dim", &self.cfg.dim)
            .finish()
    }
}

impl HttpEmbedder {
    pub fn new(cfg: EmbedderConfig, transport: Arc<dyn Transport>) -> Result<Self, EmbedError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            transport,
            retry: RetryPolicy::new(3, Duration::from_millis(250)),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn embed_batch(&self, batch: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let body = json!({ "model": self.cfg.model_id, "input": batch });
        let mut headers = vec![("Content-Type".to_string(), "application/json".to_string())];
        if let Some(key) = &self.cfg.api_key {
            headers.push(("Authorization".to_string(), format!("Bearer {key}")));
        }
        let timeout = Duration::from_millis(self.cfg.timeout_ms);
        let resp = self.retry.run(|| {
            self.transport
                .post_json(&self.cfg.endpoint_url, &headers, &body, timeout)
        })?;
        self.decode(resp, batch.len())
    }

    fn decode(&self, resp: Value, expected: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        #[derive(Deserialize)]
        struct Item {
            index: usize,
            embedding: Vec<f64>,
        }
        #[derive(Deserialize)]
        struct Body {
            data: Vec<Item>,
        }
        let body: Body = serde_json::from_value(resp)
            .map_err(|e| EmbedError::MalformedResponse(e.to_string()))?;
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; expected];
        for item in body.data {
            let slot = slots.get_mut(item.index).ok_or_else(|| {
                EmbedError::MalformedResponse(format!("index {} out of range", item.index))
            })?;
            if slot.replace(item.embedding).is_some() {
                return Err(EmbedError::MalformedResponse(format!(
                    "index {} returned twice",
                    item.index
                )));
            }
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, slot)| {
                let values = slot.ok_or_else(|| {
                    EmbedError::MalformedResponse(format!("missing embedding for index {i}"))
                })?;
                if values.len() != self.cfg.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.cfg.dim,
                        got: values.len(),
                    });
                }
                EmbeddingVector::new(self.cfg.model_id.clone(), values)
            })
            .collect()
    }
}

impl Embedder for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        reject_empty(texts)?;
        let batches: Vec<&[String]> = texts.chunks(self.cfg.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        // Up to `max_in_flight` batches are sent concurrently; results are
        // collected wave by wave so order is preserved.
        for wave in batches.chunks(self.cfg.max_in_flight) {
            let results: Vec<Result<Vec<EmbeddingVector>, EmbedError>> = if wave.len() == 1 {
                vec![self.embed_batch(wave[0])]
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|batch| s.spawn(move || self.embed_batch(batch)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("embedding worker panicked"))
                        .collect()
                })
            };
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
