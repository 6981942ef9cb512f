use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gazette_rag_ffi::*;
use serde_json::Value;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_json(p: *mut c_char) -> Value {
    assert!(!p.is_null());
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    gr_string_free(p);
    v
}

fn last_error() -> String {
    let p = gr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn stateless_helpers() {
    unsafe {
        let mut sim = 0.0;
        let (a, b) = ([1.0, 2.0, 2.0], [2.0, 1.0, 2.0]);
        assert_eq!(gr_cosine(a.as_ptr(), b.as_ptr(), 3, &mut sim), GrStatus::Ok);
        assert!((sim - 8.0 / 9.0).abs() < 1e-12);
        let zero = [0.0; 3];
        assert_eq!(gr_cosine(zero.as_ptr(), b.as_ptr(), 3, &mut sim), GrStatus::InvalidArgument);
        assert!(last_error().contains("zero norm"));

        let mut out = ptr::null_mut();
        assert_eq!(gr_split_text(c("abcdefghij").as_ptr(), 4, 2, &mut out), GrStatus::Ok);
        let chunks = take_json(out);
        let texts: Vec<&str> = chunks.as_array().unwrap().iter().map(|c| c["text"].as_str().unwrap()).collect();
        assert_eq!(texts, ["abcd", "cdef", "efgh", "ghij"]);
        assert_eq!(chunks[1]["char_span"], serde_json::json!([2, 6]));
        assert_eq!(gr_split_text(c("x").as_ptr(), 4, 4, &mut out), GrStatus::InvalidArgument);

        assert_eq!(gr_parse_verdict(c("VERDICT: IRRELEVANT\nREFINED_QUERY: river police").as_ptr(), &mut out), GrStatus::Ok);
        let v = take_json(out);
        assert_eq!((v["verdict"].as_str(), v["refined_query"].as_str()), (Some("irrelevant"), Some("river police")));

        let manifest = c(r#"{"doc_id":"a","title":"A","page_count":1,"language_hint":"bn"}
{"doc_id":"b","title":"B","page_count":36,"language_hint":"en"}"#);
        assert_eq!(gr_corpus_stats(manifest.as_ptr(), &mut out), GrStatus::Ok);
        assert_eq!(take_json(out)["total_pages"], 37);

        let mut v = [0.0; 8];
        assert_eq!(gr_mock_embed(c("ab").as_ptr(), v.as_mut_ptr(), 8), GrStatus::Ok);
        assert_eq!(v, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(!CStr::from_ptr(gr_version()).to_bytes().is_empty());
    }
}

#[test]
fn argument_errors() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(gr_split_text(ptr::null(), 4, 0, &mut out), GrStatus::NullArgument);
        assert_eq!(gr_split_text(c("x").as_ptr(), 4, 0, ptr::null_mut()), GrStatus::NullArgument);
        let bad = [0xffu8, 0xfe, 0];
        assert_eq!(gr_parse_verdict(bad.as_ptr().cast(), &mut out), GrStatus::InvalidUtf8);
        assert_eq!(gr_store_len(ptr::null()), 0);
        gr_store_free(ptr::null_mut());
        gr_string_free(ptr::null_mut());
    }
}

unsafe fn embed(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    assert_eq!(gr_mock_embed(c(text).as_ptr(), v.as_mut_ptr(), dim), GrStatus::Ok);
    v
}

#[test]
fn store_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = c(dir.path().join("store.jsonl").to_str().unwrap());
    unsafe {
        let mut store = ptr::null_mut();
        assert_eq!(gr_store_new(ptr::null(), 32, &mut store), GrStatus::Ok);
        let texts = ["Tourist Police was formed in 2013.", "Tourist Police was formed in 2013!", "River Police patrols rivers."];
        for (i, t) in texts.iter().enumerate() {
            let v = embed(t, 32);
            let id = c(&format!("c{i}"));
            assert_eq!(gr_store_add(store, id.as_ptr(), c("d").as_ptr(), c(t).as_ptr(), v.as_ptr(), 32), GrStatus::Ok);
        }
        let v = embed(texts[0], 32);
        assert_eq!(gr_store_add(store, c("c0").as_ptr(), c("d").as_ptr(), c("dup").as_ptr(), v.as_ptr(), 32), GrStatus::InvalidArgument);
        assert!(last_error().contains("duplicate"));
        assert_eq!(gr_store_len(store), 3);

        let q = embed("Tourist Police formed", 32);
        let mut out = ptr::null_mut();
        assert_eq!(gr_store_search(store, q.as_ptr(), 32, 2, &mut out), GrStatus::Ok);
        let top: Vec<String> = take_json(out).as_array().unwrap().iter().map(|c| c["chunk_id"].as_str().unwrap().into()).collect();
        assert_eq!(top.len(), 2);
        assert_eq!(gr_store_mmr(store, q.as_ptr(), 32, 2, 3, 0.3, &mut out), GrStatus::Ok);
        let mmr: Vec<String> = take_json(out).as_array().unwrap().iter().map(|c| c["chunk_id"].as_str().unwrap().into()).collect();
        // the near-copy loses the second slot once redundancy is weighted in
        assert_eq!(mmr[1], "c2", "{top:?} {mmr:?}");
        assert_eq!(gr_store_search(store, q.as_ptr(), 16, 2, &mut out), GrStatus::InvalidArgument);

        assert_eq!(gr_store_persist(store, path.as_ptr()), GrStatus::Ok);
        gr_store_free(store);
        let mut loaded = ptr::null_mut();
        assert_eq!(gr_store_load(path.as_ptr(), &mut loaded), GrStatus::Ok);
        assert_eq!(gr_store_len(loaded), 3);
        gr_store_free(loaded);

        let file = dir.path().join("store.jsonl");
        let text = std::fs::read_to_string(&file).unwrap();
        std::fs::write(&file, text.replacen("\"format_version\":1", "\"format_version\":5", 1)).unwrap();
        assert_eq!(gr_store_load(path.as_ptr(), &mut loaded), GrStatus::VersionMismatch);
        std::fs::write(&file, &text[..text.len() / 2]).unwrap();
        assert_eq!(gr_store_load(path.as_ptr(), &mut loaded), GrStatus::Corrupt);
        let missing = c(dir.path().join("missing").to_str().unwrap());
        assert_eq!(gr_store_load(missing.as_ptr(), &mut loaded), GrStatus::NotFound);
    }
}

#[test]
fn engine_queries() {
    let dir = tempfile::tempdir().unwrap();
    let script = |name: &str, replies: &[&str]| {
        let p = dir.path().join(name);
        std::fs::write(&p, serde_json::to_string(replies).unwrap()).unwrap();
        p
    };
    let g = script("g.json", &["Formed in 2013."]);
    let k = script("k.json", &["VERDICT: RELEVANT"]);
    let config = dir.path().join("config.toml");
    std::fs::write(
        &config,
        format!(
            "[pipeline.generator]\nrole = \"generator\"\nmodel_id = \"g\"\ntemperature = 0.1\nmax_tokens = 64\nbackend = \"scripted\"\nscript_path = {g:?}\n\n\
             [pipeline.checker]\nrole = \"checker\"\nmodel_id = \"k\"\ntemperature = 0.0\nmax_tokens = 64\nbackend = \"scripted\"\nscript_path = {k:?}\n"
        ),
    )
    .unwrap();
    // ingest through the core registry so the engine opens a populated directory
    let data = dir.path().join("data");
    {
        use gazette_rag::embedding::{MockEmbedder, MOCK_MODEL_ID};
        use gazette_rag::{ChunkConfig, CorpusRegistry, DocumentMeta};
        let registry = CorpusRegistry::open(&data).unwrap();
        registry.create("police", MOCK_MODEL_ID, 256).unwrap();
        let e = MockEmbedder::new(MOCK_MODEL_ID, 256).unwrap();
        registry
            .ingest("police", DocumentMeta::new("g1", "Gazette", 1), "Tourist Police was formed in 2013.", &ChunkConfig::default(), &e)
            .unwrap();
    }
    unsafe {
        let mut engine = ptr::null_mut();
        let (d, cfg) = (c(data.to_str().unwrap()), c(config.to_str().unwrap()));
        assert_eq!(gr_engine_open(d.as_ptr(), cfg.as_ptr(), &mut engine), GrStatus::Ok, "{}", last_error());
        let (mut status, mut out) = (0u16, ptr::null_mut());
        let req = c(r#"{"corpus_id":"police","question":"When was Tourist Police formed?"}"#);
        assert_eq!(gr_engine_query(engine, req.as_ptr(), &mut status, &mut out), GrStatus::Ok);
        let body = take_json(out);
        assert_eq!((status, body["answer"].as_str()), (200, Some("Formed in 2013.")));

        let req = c(r#"{"corpus_id":"nope","question":"q"}"#);
        assert_eq!(gr_engine_query(engine, req.as_ptr(), &mut status, &mut out), GrStatus::Ok);
        assert_eq!((status, take_json(out)["error"]["code"].as_str()), (404, Some("unknown_corpus")));
        gr_engine_free(engine);

        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "nonsense = true\n").unwrap();
        let bad = c(bad.to_str().unwrap());
        assert_eq!(gr_engine_open(d.as_ptr(), bad.as_ptr(), &mut engine), GrStatus::InvalidArgument);
    }
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/ffi-<hash>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libgazette_rag_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap_or_else(|e| panic!("cannot run {cc}: {e}"));
    assert!(status.success(), "C smoke test failed to compile");
    let out = Command::new(&exe).arg(tmp.path().join("s.jsonl")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
