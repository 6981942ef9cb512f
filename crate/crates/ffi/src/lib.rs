//! C ABI over `gazette-rag`.
//!
//! Every fallible function returns a [`GrStatus`]. On failure the message is
//! available from [`gr_last_error`] on the same thread until the next failing
//! call. Strings returned through `char **` out-parameters are owned by the
//! caller and must be released with [`gr_string_free`]. Structured results
//! are JSON.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gazette_rag::embedding::{cosine_similarity, mock_embed, EmbeddingVector, MOCK_MODEL_ID};
use gazette_rag::ingest::{corpus_stats, parse_manifest, split_text, ChunkConfig};
use gazette_rag::llm::parse_verdict;
use gazette_rag::service::{cli::open_service, Service};
use gazette_rag::store::{RetrievalConfig, RetrievalStrategy, StoreError, StoreRecord, VectorStore};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    Io = 5,
    Corrupt = 6,
    VersionMismatch = 7,
    Panic = 8,
}

/// Opaque vector store.
pub struct GrStore {
    inner: VectorStore,
}

/// Opaque query engine over a data directory.
pub struct GrEngine {
    service: Service,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GrStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail(status: GrStatus, message: impl Into<String>) -> Failure {
    Failure(status, message.into())
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> GrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside gazette-rag".into());
            GrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(fail(GrStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(GrStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> FfiResult<&'a [f64]> {
    if p.is_null() {
        return Err(fail(GrStatus::NullArgument, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| fail(GrStatus::NullArgument, format!("{name} is null")))
}

unsafe fn write_json<T: serde::Serialize>(out: *mut *mut c_char, value: &T) -> FfiResult<()> {
    let out = out_arg(out, "out_json")?;
    let json = serde_json::to_string(value).map_err(|e| fail(GrStatus::InvalidArgument, e.to_string()))?;
    *out = CString::new(json).expect("JSON has no interior nul").into_raw();
    Ok(())
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    fail(GrStatus::InvalidArgument, e.to_string())
}

fn store_failure(e: StoreError) -> Failure {
    let status = match &e {
        StoreError::Missing(_) => GrStatus::NotFound,
        StoreError::Corrupt(_) => GrStatus::Corrupt,
        StoreError::VersionMismatch { .. } => GrStatus::VersionMismatch,
        StoreError::Io(_) => GrStatus::Io,
        _ => GrStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Message of the last failure on this thread, or null. Borrowed: valid until
/// the next failing call on this thread.
#[no_mangle]
pub extern "C" fn gr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn gr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Splits `text` with the default separators. Writes a JSON array of
/// `{"text", "char_span": [start, end]}`.
///
/// # Safety
/// `text` must be a nul-terminated string; `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_split_text(
    text: *const c_char,
    chunk_size: usize,
    chunk_overlap: usize,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let cfg = ChunkConfig {
            chunk_size,
            chunk_overlap,
            ..ChunkConfig::default()
        };
        let drafts = split_text(text, &cfg).map_err(invalid)?;
        write_json(out_json, &drafts)
    })
}

/// Cosine similarity of two `len`-long vectors.
///
/// # Safety
/// `a` and `b` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_cosine(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> GrStatus {
    guard(|| {
        let a = EmbeddingVector::new("c", slice_arg(a, len, "a")?.to_vec()).map_err(invalid)?;
        let b = EmbeddingVector::new("c", slice_arg(b, len, "b")?.to_vec()).map_err(invalid)?;
        *out_arg(out, "out")? = cosine_similarity(&a, &b).map_err(invalid)?;
        Ok(())
    })
}

/// Mock trigram embedding of `text` into `out[0..dim]`.
///
/// # Safety
/// `out` must point to `dim` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gr_mock_embed(text: *const c_char, out: *mut f64, dim: usize) -> GrStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(fail(GrStatus::NullArgument, "out is null"));
        }
        let v = mock_embed(text, dim).map_err(invalid)?;
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&v.values);
        Ok(())
    })
}

/// Parses a relevance checker reply. Writes
/// `{"verdict", "refined_query", "parse_failed", "raw_response"}`.
///
/// # Safety
/// `raw` must be a nul-terminated string; `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_parse_verdict(raw: *const c_char, out_json: *mut *mut c_char) -> GrStatus {
    guard(|| write_json(out_json, &parse_verdict(str_arg(raw, "raw")?)))
}

/// Page statistics over a JSONL manifest held in memory.
///
/// # Safety
/// `manifest_jsonl` must be a nul-terminated string; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_corpus_stats(manifest_jsonl: *const c_char, out_json: *mut *mut c_char) -> GrStatus {
    guard(|| {
        let metas = parse_manifest(str_arg(manifest_jsonl, "manifest_jsonl")?).map_err(invalid)?;
        write_json(out_json, &corpus_stats(&metas).map_err(invalid)?)
    })
}

/// Creates an empty store. `model_id` may be null for the mock model.
///
/// # Safety
/// `out` must be writable; free the handle with [`gr_store_free`].
#[no_mangle]
pub unsafe extern "C" fn gr_store_new(model_id: *const c_char, dim: usize, out: *mut *mut GrStore) -> GrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = if model_id.is_null() {
            MOCK_MODEL_ID
        } else {
            str_arg(model_id, "model_id")?
        };
        if dim == 0 {
            return Err(fail(GrStatus::InvalidArgument, "dim must be positive"));
        }
        *out = Box::into_raw(Box::new(GrStore {
            inner: VectorStore::new(model, dim),
        }));
        Ok(())
    })
}

/// Loads a persisted store, verifying version and checksum.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_store_load(path: *const c_char, out: *mut *mut GrStore) -> GrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = VectorStore::load(Path::new(str_arg(path, "path")?)).map_err(store_failure)?;
        *out = Box::into_raw(Box::new(GrStore { inner }));
        Ok(())
    })
}

/// # Safety
/// `store` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gr_store_persist(store: *const GrStore, path: *const c_char) -> GrStatus {
    guard(|| {
        let store = store.as_ref().ok_or_else(|| fail(GrStatus::NullArgument, "store is null"))?;
        store
            .inner
            .persist(Path::new(str_arg(path, "path")?))
            .map_err(store_failure)
    })
}

/// Adds one chunk with its embedding (`dim` doubles).
///
/// # Safety
/// `store` must be a live handle, strings nul-terminated, `embedding` must
/// point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gr_store_add(
    store: *mut GrStore,
    chunk_id: *const c_char,
    doc_id: *const c_char,
    text: *const c_char,
    embedding: *const f64,
    dim: usize,
) -> GrStatus {
    guard(|| {
        let store = out_arg(store, "store")?;
        let values = slice_arg(embedding, dim, "embedding")?.to_vec();
        let record = StoreRecord {
            chunk_id: str_arg(chunk_id, "chunk_id")?.to_string(),
            doc_id: str_arg(doc_id, "doc_id")?.to_string(),
            text: str_arg(text, "text")?.to_string(),
            embedding: EmbeddingVector::new(store.inner.model_id(), values).map_err(invalid)?,
        };
        store.inner.add_chunks(vec![record]).map_err(store_failure)?;
        Ok(())
    })
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `store` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_store_len(store: *const GrStore) -> usize {
    store.as_ref().map_or(0, |s| s.inner.len())
}

unsafe fn query_vector(store: &GrStore, query: *const f64, dim: usize) -> FfiResult<EmbeddingVector> {
    EmbeddingVector::new(store.inner.model_id(), slice_arg(query, dim, "query")?.to_vec()).map_err(invalid)
}

/// Exact top-`k` by cosine. Writes a JSON array of
/// `{"chunk_id", "doc_id", "text", "score"}`.
///
/// # Safety
/// `store` must be a live handle, `query` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn gr_store_search(
    store: *const GrStore,
    query: *const f64,
    dim: usize,
    k: usize,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let store = store.as_ref().ok_or_else(|| fail(GrStatus::NullArgument, "store is null"))?;
        let q = query_vector(store, query, dim)?;
        write_json(out_json, &store.inner.top_k_by_similarity(&q, k).map_err(store_failure)?)
    })
}

/// MMR selection of `k` from the `fetch_k` nearest, trading relevance
/// against redundancy by `lambda`.
///
/// # Safety
/// As [`gr_store_search`].
#[no_mangle]
pub unsafe extern "C" fn gr_store_mmr(
    store: *const GrStore,
    query: *const f64,
    dim: usize,
    k: usize,
    fetch_k: usize,
    lambda: f64,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let store = store.as_ref().ok_or_else(|| fail(GrStatus::NullArgument, "store is null"))?;
        let q = query_vector(store, query, dim)?;
        let cfg = RetrievalConfig {
            top_k: k,
            fetch_k,
            mmr_lambda: lambda,
            strategy: RetrievalStrategy::Mmr,
        };
        write_json(out_json, &store.inner.retrieve(&q, &cfg).map_err(store_failure)?)
    })
}

/// # Safety
/// `store` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_store_free(store: *mut GrStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Opens the corpora under `data_dir` with the TOML file at `config_path`
/// (null for defaults). Endpoints and keys come from `GAZETTE_*` variables.
///
/// # Safety
/// Strings must be nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_engine_open(
    data_dir: *const c_char,
    config_path: *const c_char,
    out: *mut *mut GrEngine,
) -> GrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let data_dir = str_arg(data_dir, "data_dir")?;
        let config = if config_path.is_null() {
            None
        } else {
            Some(Path::new(str_arg(config_path, "config_path")?))
        };
        let service = open_service(Path::new(data_dir), config).map_err(invalid)?;
        *out = Box::into_raw(Box::new(GrEngine { service }));
        Ok(())
    })
}

/// Runs one query request (`{"corpus_id", "question", "pipeline",
/// "overrides"}`). Writes the HTTP-equivalent status and the response or
/// error body. A non-2xx status still returns `GR_STATUS_OK`: the call
/// itself succeeded.
///
/// # Safety
/// `engine` must be a live handle, `request_json` nul-terminated, outputs
/// writable.
#[no_mangle]
pub unsafe extern "C" fn gr_engine_query(
    engine: *const GrEngine,
    request_json: *const c_char,
    out_status: *mut u16,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let engine = engine.as_ref().ok_or_else(|| fail(GrStatus::NullArgument, "engine is null"))?;
        let request = str_arg(request_json, "request_json")?;
        let (status, body) = engine.service.handle_query_json(request.as_bytes());
        *out_arg(out_status, "out_status")? = status;
        write_json(out_json, &body)
    })
}

/// # Safety
/// `engine` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_engine_free(engine: *mut GrEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}
