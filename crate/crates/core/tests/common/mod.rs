//! Independent reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};

use gazette_rag::ingest::ChunkDraft;
use gazette_rag::embedding::{mock_embed, EmbedError, Embedder, EmbeddingVector, MockEmbedder, MOCK_MODEL_ID};
use gazette_rag::store::{StoreRecord, VectorStore};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reference recursive splitter, string based. Returns trimmed, non-empty
/// chunks.
pub fn reference_split(text: &str, size: usize, overlap: usize, seps: &[&str]) -> Vec<String> {
    fn raw(text: &str, size: usize, overlap: usize, seps: &[&str]) -> Vec<String> {
        let n = |s: &str| s.chars().count();
        let i = seps.iter().position(|s| s.is_empty() || text.contains(s)).unwrap_or(seps.len());
        let sep = seps.get(i).copied().unwrap_or("");
        let rest = seps.get(i + 1..).unwrap_or(&[]);
        let pieces: Vec<String> = if sep.is_empty() {
            text.chars().map(String::from).collect()
        } else {
            let parts = text.split(sep).enumerate();
            parts.map(|(j, p)| if j == 0 { p.to_string() } else { format!("{sep}{p}") }).filter(|p| !p.is_empty()).collect()
        };
        let (mut out, mut win, mut total) = (Vec::new(), Vec::<String>::new(), 0);
        for p in pieces {
            let l = n(&p);
            if l > size {
                if !win.is_empty() {
                    out.push(win.concat());
                    win.clear();
                    total = 0;
                }
                out.extend(raw(&p, size, overlap, rest));
                continue;
            }
            if total + l > size && !win.is_empty() {
                out.push(win.concat());
                while total > overlap || (total + l > size && total > 0) {
                    total -= n(&win.remove(0));
                }
            }
            total += l;
            win.push(p);
        }
        if !win.is_empty() {
            out.push(win.concat());
        }
        out
    }
    raw(text, size, overlap, seps).iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect()
}

pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Full-sort ranking: every record scored, sorted by (score desc, id asc).
pub fn oracle_ranking(records: &[(String, Vec<f64>)], query: &[f64]) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = records
        .iter()
        .map(|(id, v)| (id.clone(), oracle_cosine(query, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
}

/// Step-by-step MMR: at every step the objective is evaluated from scratch
/// for each remaining candidate.
pub fn oracle_mmr(
    records: &[(String, Vec<f64>)],
    query: &[f64],
    top_k: usize,
    fetch_k: usize,
    lambda: f64,
) -> Vec<String> {
    let ranked = oracle_ranking(records, query);
    let candidates: Vec<&(String, f64)> = ranked.iter().take(fetch_k).collect();
    let vec_of = |id: &str| &records.iter().find(|(r, _)| r == id).unwrap().1;
    let mut selected: Vec<String> = Vec::new();
    while selected.len() < top_k.min(candidates.len()) {
        if selected.is_empty() {
            selected.push(candidates[0].0.clone());
            continue;
        }
        let mut best: Option<(f64, &String)> = None;
        for (id, sim) in candidates.iter().map(|c| (&c.0, c.1)) {
            if selected.contains(id) {
                continue;
            }
            let redundancy = selected
                .iter()
                .map(|s| oracle_cosine(vec_of(id), vec_of(s)))
                .fold(f64::NEG_INFINITY, f64::max);
            let value = lambda * sim - (1.0 - lambda) * redundancy;
            let wins = match best {
                None => true,
                Some((bv, bid)) => value > bv || (value == bv && id < bid),
            };
            if wins {
                best = Some((value, id));
            }
        }
        selected.push(best.unwrap().1.clone());
    }
    selected
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return v;
        }
    }
}

pub fn store_from(model: &str, records: &[(String, Vec<f64>)]) -> VectorStore {
    let dim = records.first().map(|r| r.1.len()).unwrap_or(8);
    let mut s = VectorStore::new(model, dim);
    s.add_chunks(
        records
            .iter()
            .map(|(id, v)| StoreRecord {
                chunk_id: id.clone(),
                doc_id: "d".into(),
                text: format!("text of {id}"),
                embedding: EmbeddingVector::new(model, v.clone()).unwrap(),
            })
            .collect(),
    )
    .unwrap();
    s
}

/// Mock-embedded store over `texts`, chunk ids `c00`, `c01`, ...
pub fn text_store(texts: &[String], dim: usize) -> VectorStore {
    let mut s = VectorStore::new(gazette_rag::embedding::MOCK_MODEL_ID, dim);
    s.add_chunks(
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| StoreRecord {
                chunk_id: format!("c{i:02}"),
                doc_id: format!("d{}", i % 3),
                text: t.clone(),
                embedding: mock_embed(t, dim).unwrap(),
            })
            .collect(),
    )
    .unwrap();
    s
}

const WORDS: &[&str] = &[
    "ট্যুরিস্ট", "পুলিশ", "গেজেট", "প্রজ্ঞাপন", "আইন", "বিধি", "নিয়োগ", "পদোন্নতি", "২০১৩", "সালে",
    "Tourist", "Police", "gazette", "notification", "rule", "river", "appointment", "2013", "section",
    "district",
];

/// A short bilingual sentence drawn from a fixed vocabulary.
pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..9);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// Counts `embed` calls; each pipeline retrieval embeds the query once.
pub struct CountingEmbedder {
    inner: MockEmbedder,
    calls: AtomicUsize,
}

impl CountingEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            inner: MockEmbedder::new(gazette_rag::embedding::MOCK_MODEL_ID, dim).unwrap(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Embedder for CountingEmbedder {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.embed(texts)
    }
}

/// Checks the splitter contract for one output: size bound, span/text
/// agreement on scalar offsets, ordering, whitespace-only gaps, and
/// reconstruction of the covered text.
pub fn check_split(text: &str, size: usize, drafts: &[ChunkDraft]) -> Result<(), String> {
    let chars: Vec<char> = text.chars().collect();
    let span_text = |a: usize, b: usize| chars[a..b].iter().collect::<String>();
    let blank = |a: usize, b: usize| chars[a..b].iter().all(|c| c.is_whitespace());
    if drafts.is_empty() {
        return blank(0, chars.len()).then_some(()).ok_or_else(|| "no chunks for non-blank text".into());
    }
    for d in drafts {
        let (a, b) = d.char_span;
        let n = d.text.chars().count();
        if n == 0 || n > size {
            return Err(format!("chunk length {n} outside 1..={size}"));
        }
        if b > chars.len() || span_text(a, b) != d.text {
            return Err(format!("span {a}..{b} does not match chunk text {:?}", d.text));
        }
    }
    if !blank(0, drafts[0].char_span.0) || !blank(drafts.last().unwrap().char_span.1, chars.len()) {
        return Err("non-whitespace text outside the chunks".into());
    }
    let mut rebuilt = drafts[0].text.clone();
    for w in drafts.windows(2) {
        let ((a0, b0), (a1, b1)) = (w[0].char_span, w[1].char_span);
        if a1 < a0 || b1 < b0 {
            return Err(format!("chunks out of order: {a0}..{b0} then {a1}..{b1}"));
        }
        if a1 > b0 && !blank(b0, a1) {
            return Err(format!("gap {b0}..{a1} is not whitespace"));
        }
        rebuilt.push_str(&span_text(b0, b1));
    }
    let covered = span_text(drafts[0].char_span.0, drafts.last().unwrap().char_span.1);
    if rebuilt != covered {
        return Err("overlap removal does not reproduce the source".into());
    }
    Ok(())
}

pub struct MmrInstance {
    pub records: Vec<(String, Vec<f64>)>,
    pub query: Vec<f64>,
    pub top_k: usize,
    pub fetch_k: usize,
    pub lambda: f64,
}

/// ≤20 records, dim ≤16, k ≤5, λ from the fixed grid. A third of the
/// instances use {-1, 0, 1} coordinates plus exact duplicates so that ties
/// are common.
pub fn random_mmr_instance(rng: &mut ChaCha8Rng) -> MmrInstance {
    let dim = rng.gen_range(1..=16);
    let n = rng.gen_range(1..=20);
    let quantized = rng.gen_bool(1.0 / 3.0);
    let draw = |rng: &mut ChaCha8Rng| loop {
        if !quantized {
            break random_vector(rng, dim);
        }
        let v: Vec<f64> = (0..dim).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect();
        if v.iter().any(|x| *x != 0.0) {
            break v;
        }
    };
    let mut records: Vec<(String, Vec<f64>)> = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i > 0 && rng.gen_bool(0.15) {
            records[rng.gen_range(0..i)].1.clone()
        } else {
            draw(rng)
        };
        records.push((format!("r{:02}", rng.gen_range(0..100) * 100 + i), v));
    }
    let query = draw(rng);
    let top_k = rng.gen_range(1..=5);
    let fetch_k = rng.gen_range(top_k..=top_k + 20);
    let lambda = [0.0, 0.3, 0.5, 0.7, 1.0][rng.gen_range(0..5)];
    MmrInstance { records, query, top_k, fetch_k, lambda }
}

pub fn check_mmr_instance(inst: &MmrInstance) -> Result<(), String> {
    use gazette_rag::store::RetrievalConfig;
    let store = store_from("m", &inst.records);
    let cfg = RetrievalConfig {
        top_k: inst.top_k,
        fetch_k: inst.fetch_k,
        mmr_lambda: inst.lambda,
        ..RetrievalConfig::default()
    };
    let q = EmbeddingVector::new("m", inst.query.clone()).unwrap();
    let got = store.mmr_select(&q, &cfg).map_err(|e| e.to_string())?;
    let got_ids: Vec<String> = got.iter().map(|c| c.chunk_id.clone()).collect();
    let want = oracle_mmr(&inst.records, &inst.query, inst.top_k, inst.fetch_k, inst.lambda);
    if got_ids != want {
        return Err(format!("mmr {got_ids:?} != oracle {want:?} (k {}, fetch {}, λ {})", inst.top_k, inst.fetch_k, inst.lambda));
    }
    for c in &got {
        let v = &inst.records.iter().find(|r| r.0 == c.chunk_id).unwrap().1;
        if c.score != oracle_cosine(&inst.query, v) {
            return Err(format!("score of {} is {} not sim(q, d)", c.chunk_id, c.score));
        }
    }
    Ok(())
}

pub const DIM: usize = 64;

pub fn irrelevant(i: usize) -> String {
    format!("VERDICT: IRRELEVANT\nREFINED_QUERY: পুলিশ refined {i}")
}

pub struct Outcome {
    pub result: gazette_rag::RagResult,
    pub retrievals: usize,
    pub checker_calls: usize,
    pub generator_calls: usize,
    /// The question section of every checker prompt, in order.
    pub checker_queries: Vec<String>,
}

/// Runs one query with scripted backends and counts every backend call.
pub fn run_pipeline(
    store: &VectorStore,
    question: &str,
    mode: gazette_rag::PipelineMode,
    checker_script: Vec<String>,
    configure: impl FnOnce(&mut gazette_rag::PipelineConfig),
) -> Result<Outcome, gazette_rag::PipelineError> {
    use gazette_rag::llm::{PromptSet, ScriptedBackend};
    use gazette_rag::{Pipeline, PipelineConfig, Query};

    let embedder = CountingEmbedder::new(store.dim());
    let generator = ScriptedBackend::new(["generated answer"]);
    let checker = ScriptedBackend::new(checker_script);
    let prompts = PromptSet::default();
    let mut cfg = PipelineConfig::default().with_mode(mode);
    configure(&mut cfg);
    let pipeline = Pipeline::new(store, &embedder, &generator, &prompts).with_checker(&checker);
    let result = pipeline.answer(&Query::new(question, "c"), &cfg)?;
    Ok(Outcome {
        result,
        retrievals: embedder.calls(),
        checker_calls: checker.calls(),
        generator_calls: generator.calls(),
        checker_queries: checker
            .call_log()
            .iter()
            .map(|c| c.user_prompt.rsplit("### Question\n").next().unwrap().to_string())
            .collect(),
    })
}

/// A small random bilingual corpus and a question drawn from the same
/// vocabulary.
pub fn random_corpus(rng: &mut ChaCha8Rng) -> (VectorStore, String) {
    let n = rng.gen_range(5..25);
    let texts: Vec<String> = (0..n).map(|_| random_sentence(rng)).collect();
    (text_store(&texts, DIM), random_sentence(rng))
}

/// Thirteen gazettes, 81 pages, shortest 1, longest 36.
pub const GAZETTE_PAGES: [u32; 13] = [36, 1, 2, 3, 4, 5, 6, 3, 2, 4, 5, 6, 4];

pub fn gazette_manifest() -> String {
    GAZETTE_PAGES
        .iter()
        .enumerate()
        .map(|(i, p)| {
            format!(r#"{{"doc_id":"pg{i:02}","title":"Police Gazette {i}","page_count":{p},"language_hint":"mixed"}}"#)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Per-domain reports whose overall means are exactly `mean`.
pub fn flat_report(mean: f64, spread: f64) -> gazette_rag::eval::EvalReport {
    use gazette_rag::eval::{Domain, EvalReport, ItemScore};
    let per_item = Domain::ALL
        .iter()
        .enumerate()
        .flat_map(|(i, d)| {
            [(-spread, 0), (spread, 1)].map(|(off, j)| ItemScore {
                id: format!("{i}-{j}"),
                domain: *d,
                score: mean + off,
            })
        })
        .collect();
    EvalReport::from_scores(per_item).unwrap()
}

/// A service over one ingested corpus `c1` with scripted backends and a
/// frozen clock.
pub fn scripted_service(generator: &[&str], checker: &[&str]) -> gazette_rag::service::Service {
    use gazette_rag::llm::ScriptedBackend;
    use gazette_rag::pipeline::FrozenClock;
    use gazette_rag::{ChunkConfig, CorpusRegistry, DocumentMeta, PipelineConfig};
    use std::sync::Arc;

    let registry = Arc::new(CorpusRegistry::in_memory());
    let embedder: Arc<dyn Embedder> = Arc::new(MockEmbedder::new(MOCK_MODEL_ID, DIM).unwrap());
    registry.create("c1", MOCK_MODEL_ID, DIM).unwrap();
    registry.create("empty", MOCK_MODEL_ID, DIM).unwrap();
    let text = "ট্যুরিস্ট পুলিশ ২০১৩ সালে গঠিত হয়।\n\nTourist Police was formed in 2013.\n\n\
                রিভার পুলিশ নদীপথে টহল দেয়।\n\nHighway Police guards national highways.";
    registry
        .ingest(
            "c1",
            DocumentMeta::new("g1", "Police Gazette", 2),
            text,
            &ChunkConfig::new(60, 0, &["\n\n", "।", " ", ""]).unwrap(),
            embedder.as_ref(),
        )
        .unwrap();
    gazette_rag::service::Service::new(
        registry,
        embedder,
        Arc::new(ScriptedBackend::new(generator.iter().copied())),
        Arc::new(ScriptedBackend::new(checker.iter().copied())),
        PipelineConfig::default(),
    )
    .with_clock(Arc::new(FrozenClock))
}

pub fn query_request(corpus: &str, question: &str) -> gazette_rag::service::QueryRequest {
    gazette_rag::service::QueryRequest {
        corpus_id: corpus.into(),
        question: question.into(),
        pipeline: gazette_rag::PipelineMode::Advanced,
        overrides: None,
    }
}

/// (text, size, overlap, separators, expected chunks)
pub type SplitCase = (&'static str, usize, usize, &'static [&'static str], &'static [&'static str]);

/// Confirmed against `reference_split`.
#[rustfmt::skip]
pub const GOLDEN_SPLITS: &[SplitCase] = &[
        ("aaaa bbbb cccc", 9, 0, &[" ", ""], &["aaaa bbbb", "cccc"]),
        ("abcdefghij", 4, 2, &[""], &["abcd", "cdef", "efgh", "ghij"]),
        ("প\u{9c1}লিশ আইন।নত\u{9c1}ন বিধি।শেষ", 12, 0, &["।", ""], &["প\u{9c1}লিশ আইন", "।নত\u{9c1}ন বিধি", "।শেষ"]),
        ("ট\u{9cd}য\u{9c1}রিস\u{9cd}ট প\u{9c1}লিশ ২০১৩ স\u{9be}লে গঠিত হয\u{9bc}। রিভ\u{9be}র প\u{9c1}লিশ নদী প\u{9be}হ\u{9be}র\u{9be} দেয\u{9bc}।", 20, 5, &["\n\n", "\n", "।", ". ", " ", ""], &["ট\u{9cd}য\u{9c1}রিস\u{9cd}ট প\u{9c1}লিশ ২০১৩", "২০১৩ স\u{9be}লে গঠিত হয\u{9bc}", "। রিভ\u{9be}র প\u{9c1}লিশ নদী", "নদী প\u{9be}হ\u{9be}র\u{9be} দেয\u{9bc}", "।"]),
        ("Tourist Police was formed in 2013. River Police patrols rivers. Highway Police guards roads.", 40, 10, &["\n\n", "\n", "।", ". ", " ", ""], &["Tourist Police was formed in 2013", ". River Police patrols rivers", ". Highway Police guards roads."]),
        ("First paragraph here.\n\nSecond paragraph is here.\n\nThird.", 30, 0, &["\n\n", "\n", "।", ". ", " ", ""], &["First paragraph here.", "Second paragraph is here.", "Third."]),
        ("line one\nline two\nline three\nline four", 18, 4, &["\n\n", "\n", "।", ". ", " ", ""], &["line one\nline two", "line three", "line four"]),
        ("", 10, 0, &["\n\n", "\n", "।", ". ", " ", ""], &[]),
        ("   \n\n  ", 4, 0, &["\n\n", "\n", "।", ". ", " ", ""], &[]),
        ("short", 1000, 150, &["\n\n", "\n", "।", ". ", " ", ""], &["short"]),
        ("আইন।বিধি।প\u{9cd}রজ\u{9cd}ঞ\u{9be}পন।গেজেট।", 6, 2, &["\n\n", "\n", "।", ". ", " ", ""], &["আইন", "।বিধি", "।প\u{9cd}রজ\u{9cd}", "জ\u{9cd}ঞ\u{9be}পন", "।গেজেট", "।"]),
        ("a b c d e f g h i j k l m n o p", 7, 3, &["\n\n", "\n", "।", ". ", " ", ""], &["a b c d", "d e f", "f g h", "h i j", "j k l", "l m n", "n o p"]),
        ("supercalifragilisticexpialidocious word", 10, 3, &["\n\n", "\n", "।", ". ", " ", ""], &["supercalif", "lifragilis", "listicexpi", "xpialidoci", "ocious", "word"]),
        ("ব\u{9be}ংল\u{9be}দেশ প\u{9c1}লিশ গেজেট ২০২০\n\nঅতিরিক\u{9cd}ত প\u{9c1}লিশ স\u{9c1}প\u{9be}র পদে পদোন\u{9cd}নতি।\nজেল\u{9be}: ঢ\u{9be}ক\u{9be}।", 25, 5, &["\n\n", "\n", "।", ". ", " ", ""], &["ব\u{9be}ংল\u{9be}দেশ প\u{9c1}লিশ গেজেট ২০২০", "অতিরিক\u{9cd}ত প\u{9c1}লিশ স\u{9c1}প\u{9be}র পদে", "পদে পদোন\u{9cd}নতি", "।", "জেল\u{9be}: ঢ\u{9be}ক\u{9be}।"]),
        ("x. y. z. w. v. u.", 5, 0, &["\n\n", "\n", "।", ". ", " ", ""], &["x. y", ". z", ". w", ". v", ". u."]),
        ("mixed ব\u{9be}ংল\u{9be} and English। next sentence. last", 15, 4, &["\n\n", "\n", "।", ". ", " ", ""], &["mixed ব\u{9be}ংল\u{9be} and", "and English", "। next sentence", ". last"]),
        ("a\n\n\n\nb", 1, 0, &["\n\n", "\n", "।", ". ", " ", ""], &["a", "b"]),
        ("ক\u{9cd}ষ\u{9cd}ম\u{9be} ক\u{9cd}ষ\u{9cd}ম\u{9be} ক\u{9cd}ষ\u{9cd}ম\u{9be}", 3, 1, &["\n\n", "\n", "।", ". ", " ", ""], &["ক\u{9cd}ষ", "ষ\u{9cd}ম", "ম\u{9be}", "ক\u{9cd}", "\u{9cd}ষ\u{9cd}", "\u{9cd}ম\u{9be}", "ক\u{9cd}", "\u{9cd}ষ\u{9cd}", "\u{9cd}ম\u{9be}"]),
        ("one two three four five six seven eight nine ten", 12, 6, &[" ", ""], &["one two", "two three", "three four", "four five", "five six", "six seven", "seven eight", "eight nine", "nine ten"]),
        ("Section 1. Definitions.\nSection 2. Scope।\n\nSection 3. Repeal.", 20, 0, &["\n\n", "\n", "।", ". ", " ", ""], &["Section 1", ". Definitions.", "Section 2. Scope।", "Section 3. Repeal."]),
        ("৳১০০০ ট\u{9be}ক\u{9be} জরিম\u{9be}ন\u{9be}। ৳৫০০ ট\u{9be}ক\u{9be} ফি।", 10, 3, &["\n\n", "\n", "।", ". ", " ", ""], &["৳১০০০ ট\u{9be}ক\u{9be}", "জরিম\u{9be}ন\u{9be}", "। ৳৫০০", "ট\u{9be}ক\u{9be} ফি", "।"]),
];

pub const COSINE_CASES: &[(&[f64], &[f64], f64)] = &[
    (&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0], 8.0 / 9.0),
    (&[1.0, 0.0], &[0.0, 1.0], 0.0),
    (&[1.0, 1.0], &[-1.0, -1.0], -1.0),
    (&[3.0, 4.0], &[3.0, 4.0], 1.0),
    (&[0.5, 0.0, 0.0, 0.0], &[1.0, 1.0, 1.0, 1.0], 0.5),
];

pub const QUESTION: &str = "ট্যুরিস্ট পুলিশ কবে গঠিত হয়?";

pub fn gazette_store() -> VectorStore {
    let texts: Vec<String> = [
        "ট্যুরিস্ট পুলিশ ২০১৩ সালে গঠিত হয়।",
        "রিভার পুলিশ নদীপথে টহল দেয়।",
        "Tourist Police was formed in 2013.",
        "Highway Police guards national highways.",
        "পুলিশ সুপার পদে পদোন্নতির প্রজ্ঞাপন।",
        "Appointment of district police officers.",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    text_store(&texts, DIM)
}

/// One refinement then an unparseable verdict; returns the serialized
/// result.
pub fn determinism_scenario() -> String {
    let store = gazette_store();
    let out = run_pipeline(
        &store,
        QUESTION,
        gazette_rag::PipelineMode::Advanced,
        vec![irrelevant(1), "garbled".into()],
        |_| {},
    )
    .unwrap();
    serde_json::to_string(&out.result).unwrap()
}

/// SHA-256 of `determinism_scenario()` as first recorded.
pub const SCENARIO_DIGEST: &str = "f25e8a65dc374ef0c9383837ccbc045486e0a1e027c2349958d895a2a4a05a39";

/// A random bilingual string with a valid size/overlap pair.
pub fn random_split_input(rng: &mut ChaCha8Rng) -> (String, usize, usize) {
    const FRAGMENTS: &[&str] = &[" ", " ", "\n", "\n\n", "।", ". ", "\t"];
    let mut text = String::new();
    for _ in 0..rng.gen_range(0..80) {
        match rng.gen_range(0..10) {
            0..=3 => text.extend((0..rng.gen_range(1..=8)).map(|_| char::from(rng.gen_range(b'a'..=b'z')))),
            4..=7 => text.extend((0..rng.gen_range(1..=8)).map(|_| {
                let c = rng.gen_range(0x0985u32..=0x09CD);
                char::from_u32(c).unwrap()
            })),
            _ => text.push_str(FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())]),
        }
    }
    let size = rng.gen_range(1..60);
    (text, size, rng.gen_range(0..size))
}
