#ifndef GAZETTE_RAG_H
#define GAZETTE_RAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_NULL_ARGUMENT = 1,
  GR_STATUS_INVALID_UTF8 = 2,
  GR_STATUS_INVALID_ARGUMENT = 3,
  GR_STATUS_NOT_FOUND = 4,
  GR_STATUS_IO = 5,
  GR_STATUS_CORRUPT = 6,
  GR_STATUS_VERSION_MISMATCH = 7,
  GR_STATUS_PANIC = 8,
} GrStatus;

// Opaque query engine over a data directory.
typedef struct GrEngine GrEngine;

// Opaque vector store.
typedef struct GrStore GrStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Borrowed: valid until
// the next failing call on this thread.
const char *gr_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void gr_string_free(char *s);

// Library version, static.
const char *gr_version(void);

// Splits `text` with the default separators. Writes a JSON array of
// `{"text", "char_span": [start, end]}`.
//
// # Safety
// `text` must be a nul-terminated string; `out_json` a writable pointer.
enum GrStatus gr_split_text(const char *text,
                            size_t chunk_size,
                            size_t chunk_overlap,
                            char **out_json);

// Cosine similarity of two `len`-long vectors.
//
// # Safety
// `a` and `b` must point to `len` doubles; `out` must be writable.
enum GrStatus gr_cosine(const double *a, const double *b, size_t len, double *out);

// Mock trigram embedding of `text` into `out[0..dim]`.
//
// # Safety
// `out` must point to `dim` writable doubles.
enum GrStatus gr_mock_embed(const char *text, double *out, size_t dim);

// Parses a relevance checker reply. Writes
// `{"verdict", "refined_query", "parse_failed", "raw_response"}`.
//
// # Safety
// `raw` must be a nul-terminated string; `out_json` a writable pointer.
enum GrStatus gr_parse_verdict(const char *raw, char **out_json);

// Page statistics over a JSONL manifest held in memory.
//
// # Safety
// `manifest_jsonl` must be a nul-terminated string; `out_json` writable.
enum GrStatus gr_corpus_stats(const char *manifest_jsonl, char **out_json);

// Creates an empty store. `model_id` may be null for the mock model.
//
// # Safety
// `out` must be writable; free the handle with [`gr_store_free`].
enum GrStatus gr_store_new(const char *model_id, size_t dim, struct GrStore **out);

// Loads a persisted store, verifying version and checksum.
//
// # Safety
// `path` must be a nul-terminated string; `out` writable.
enum GrStatus gr_store_load(const char *path, struct GrStore **out);

// # Safety
// `store` must be a live handle; `path` a nul-terminated string.
enum GrStatus gr_store_persist(const struct GrStore *store, const char *path);

// Adds one chunk with its embedding (`dim` doubles).
//
// # Safety
// `store` must be a live handle, strings nul-terminated, `embedding` must
// point to `dim` doubles.
enum GrStatus gr_store_add(struct GrStore *store,
                           const char *chunk_id,
                           const char *doc_id,
                           const char *text,
                           const double *embedding,
                           size_t dim);

// Number of records; 0 for a null handle.
//
// # Safety
// `store` must be null or a live handle.
size_t gr_store_len(const struct GrStore *store);

// Exact top-`k` by cosine. Writes a JSON array of
// `{"chunk_id", "doc_id", "text", "score"}`.
//
// # Safety
// `store` must be a live handle, `query` must point to `dim` doubles.
enum GrStatus gr_store_search(const struct GrStore *store,
                              const double *query,
                              size_t dim,
                              size_t k,
                              char **out_json);

// MMR selection of `k` from the `fetch_k` nearest, trading relevance
// against redundancy by `lambda`.
//
// # Safety
// As [`gr_store_search`].
enum GrStatus gr_store_mmr(const struct GrStore *store,
                           const double *query,
                           size_t dim,
                           size_t k,
                           size_t fetch_k,
                           double lambda,
                           char **out_json);

// # Safety
// `store` must be null or a handle not yet freed.
void gr_store_free(struct GrStore *store);

// Opens the corpora under `data_dir` with the TOML file at `config_path`
// (null for defaults). Endpoints and keys come from `GAZETTE_*` variables.
//
// # Safety
// Strings must be nul-terminated; `out` writable.
enum GrStatus gr_engine_open(const char *data_dir, const char *config_path, struct GrEngine **out);

// Runs one query request (`{"corpus_id", "question", "pipeline",
// "overrides"}`). Writes the HTTP-equivalent status and the response or
// error body. A non-2xx status still returns `GR_STATUS_OK`: the call
// itself succeeded.
//
// # Safety
// `engine` must be a live handle, `request_json` nul-terminated, outputs
// writable.
enum GrStatus gr_engine_query(const struct GrEngine *engine,
                              const char *request_json,
                              uint16_t *out_status,
                              char **out_json);

// # Safety
// `engine` must be null or a handle not yet freed.
void gr_engine_free(struct GrEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZETTE_RAG_H */
