//! Command-line front end. `main.rs` only calls [`run`].
//!
//! Exit codes: 0 success, 1 runtime or per-item failure, 2 configuration
//! or usage error.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{QueryRequest, Service};
use crate::corpus::CorpusRegistry;
use crate::embedding::{Embedder, EmbedderBackend, EmbedderConfig, MOCK_MODEL_ID};
use crate::eval::{
    compare_pipelines, load_testset, semantic_similarity_eval, AnswerRecord, EvalReport, QaItem,
};
use crate::ingest::{corpus_stats, load_manifest, preprocess_document, ChunkConfig};
use crate::llm::{ChatBackend, LlmConfig, PromptLanguage, PromptSet};
use crate::pipeline::{Pipeline, PipelineConfig, PipelineMode, Query, SystemClock};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

const DEFAULT_MOCK_DIM: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "gazette-rag", version, about = "Bilingual retrieval-augmented QA over gazettes")]
pub struct Cli {
    /// Directory holding ingested corpora.
    #[arg(long, global = true, env = "GAZETTE_DATA_DIR", default_value = "gazette-data")]
    pub data_dir: PathBuf,
    /// TOML configuration file.
    #[arg(long, global = true, env = "GAZETTE_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, embed and index documents into a corpus.
    Ingest(IngestArgs),
    /// Answer one question.
    Query(QueryArgs),
    /// Run a QA testset through one or both pipelines and score the answers.
    Eval(EvalArgs),
    /// Page statistics for a manifest.
    Stats(StatsArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: String,
    /// JSONL manifest; each input file is matched to the entry whose doc_id
    /// equals its file stem.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Run inputs through this OCR command (`{input}`/`{output}` placeholders)
    /// instead of reading them as UTF-8 text.
    #[arg(long)]
    pub ocr_command: Option<String>,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub corpus: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Advanced)]
    pub pipeline: ModeArg,
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Print the full response as JSON.
    #[arg(long)]
    pub json: bool,
    pub question: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: String,
    #[arg(long)]
    pub testset: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalPipelines::Both)]
    pub pipeline: EvalPipelines,
    /// Comma-separated generator temperatures; one report per value.
    #[arg(long, value_delimiter = ',')]
    pub temperature: Vec<f64>,
    #[arg(long)]
    pub prompt_language: Option<PromptLanguage>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Vanilla,
    Advanced,
}

impl From<ModeArg> for PipelineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Vanilla => PipelineMode::Vanilla,
            ModeArg::Advanced => PipelineMode::Advanced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalPipelines {
    Vanilla,
    Advanced,
    Both,
}

impl EvalPipelines {
    fn modes(self) -> Vec<PipelineMode> {
        match self {
            EvalPipelines::Vanilla => vec![PipelineMode::Vanilla],
            EvalPipelines::Advanced => vec![PipelineMode::Advanced],
            EvalPipelines::Both => vec![PipelineMode::Vanilla, PipelineMode::Advanced],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub max_concurrent: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { max_concurrent: 16 }
    }
}

/// Everything the configuration file can set. Endpoint URLs and API keys
/// come from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub pipeline: PipelineConfig,
    pub chunking: ChunkConfig,
    pub embedder: EmbedderConfig,
    pub server: ServerConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            chunking: ChunkConfig::default(),
            embedder: EmbedderConfig::mock(DEFAULT_MOCK_DIM),
            server: ServerConfig::default(),
        }
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl AppConfig {
    pub fn from_toml(src: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(src).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.pipeline.validate().map_err(|e| e.to_string())?;
        self.chunking.validate().map_err(|e| e.to_string())?;
        if self.server.max_concurrent == 0 {
            return Err("server.max_concurrent must be >= 1".into());
        }
        Ok(())
    }

    /// Applies `GAZETTE_*` variables read through `var`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), String> {
        if let Some(url) = var("GAZETTE_EMBED_URL").filter(|v| !v.is_empty()) {
            self.embedder.backend = EmbedderBackend::Http;
            self.embedder.endpoint_url = url;
            if self.embedder.model_id == MOCK_MODEL_ID {
                self.embedder.model_id = "embedding".into();
            }
        }
        if let Some(model) = var("GAZETTE_EMBED_MODEL").filter(|v| !v.is_empty()) {
            self.embedder.model_id = model;
        }
        if let Some(dim) = var("GAZETTE_EMBED_DIM").filter(|v| !v.is_empty()) {
            self.embedder.dim = dim
                .parse()
                .map_err(|_| format!("GAZETTE_EMBED_DIM is not an integer: {dim:?}"))?;
        }
        self.embedder.api_key = var("GAZETTE_EMBED_API_KEY");
        for (cfg, prefix) in [
            (&mut self.pipeline.generator, "GAZETTE_GENERATOR"),
            (&mut self.pipeline.checker, "GAZETTE_CHECKER"),
        ] {
            if let Some(url) = var(&format!("{prefix}_URL")).filter(|v| !v.is_empty()) {
                cfg.endpoint_url = url;
            }
            cfg.api_key = var(&format!("{prefix}_API_KEY"));
        }
        Ok(())
    }
}

struct Context {
    data_dir: PathBuf,
    config: AppConfig,
}

impl Context {
    fn load(data_dir: &Path, config: Option<&Path>) -> Result<Self, CliError> {
        let mut config = match config {
            Some(path) => {
                let src = std::fs::read_to_string(path)
                    .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                AppConfig::from_toml(&src).map_err(|e| config_err(format!("{}: {e}", path.display())))?
            }
            None => AppConfig::default(),
        };
        config
            .apply_env(|k| std::env::var(k).ok())
            .map_err(config_err)?;
        Ok(Self {
            data_dir: data_dir.to_path_buf(),
            config,
        })
    }

    fn registry(&self) -> Result<Arc<CorpusRegistry>, CliError> {
        CorpusRegistry::open(&self.data_dir)
            .map(Arc::new)
            .map_err(|e| config_err(format!("{}: {e}", self.data_dir.display())))
    }

    fn embedder(&self) -> Result<Arc<dyn Embedder>, CliError> {
        self.config.embedder.build().map_err(config_err)
    }

    fn chat(&self, cfg: &LlmConfig) -> Result<Arc<dyn ChatBackend>, CliError> {
        cfg.build().map_err(config_err)
    }

    fn service(&self, need_checker: bool) -> Result<Service, CliError> {
        let generator = self.chat(&self.config.pipeline.generator)?;
        // vanilla never calls the checker; reuse the generator rather than
        // demanding a second endpoint
        let checker = if need_checker {
            self.chat(&self.config.pipeline.checker)?
        } else {
            Arc::clone(&generator)
        };
        Ok(Service::new(
            self.registry()?,
            self.embedder()?,
            generator,
            checker,
            self.config.pipeline.clone(),
        )
        .with_chunk_config(self.config.chunking.clone()))
    }
}

/// The service `serve` would run: `config` (or the defaults) plus
/// `GAZETTE_*` variables, over the corpora under `data_dir`.
pub fn open_service(data_dir: &Path, config: Option<&Path>) -> Result<Service, String> {
    Context::load(data_dir, config)
        .and_then(|ctx| ctx.service(true))
        .map_err(|e| match e {
            CliError::Config(m) | CliError::Runtime(m) => m,
        })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = Context::load(&cli.data_dir, cli.config.as_deref()).and_then(|ctx| match &cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Query(a) => query(&ctx, a),
        Command::Eval(a) => run_eval_command(&ctx, a),
        Command::Stats(a) => stats(a),
        Command::Serve(a) => serve(&ctx, a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let (CliError::Config(m) | CliError::Runtime(m)) = &e;
            eprintln!("error: {m}");
            e.exit_code()
        }
    }
}

fn ingest(ctx: &Context, args: &IngestArgs) -> Result<i32, CliError> {
    let metas = load_manifest(&args.manifest).map_err(config_err)?;
    let by_id: HashMap<&str, _> = metas.iter().map(|m| (m.doc_id.as_str(), m)).collect();
    let mut jobs = Vec::with_capacity(args.files.len());
    for file in &args.files {
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| config_err(format!("{}: cannot derive a doc_id", file.display())))?;
        let meta = by_id
            .get(stem)
            .ok_or_else(|| config_err(format!("{}: no manifest entry with doc_id {stem:?}", file.display())))?;
        jobs.push((file, (*meta).clone()));
    }

    let registry = ctx.registry()?;
    let embedder = ctx.embedder()?;
    if registry.get(&args.corpus).is_none() {
        registry
            .create(&args.corpus, embedder.model_id(), embedder.dim())
            .map_err(config_err)?;
    }
    let mut failed = 0;
    for (file, mut meta) in jobs {
        let text = match &args.ocr_command {
            Some(template) => preprocess_document(file, template).map_err(|e| e.to_string()),
            None => std::fs::read_to_string(file).map_err(|e| e.to_string()),
        };
        let outcome = text.and_then(|text| {
            if meta.source_path.is_empty() {
                meta.source_path = file.display().to_string();
            }
            let doc_id = meta.doc_id.clone();
            registry
                .ingest(&args.corpus, meta, &text, &ctx.config.chunking, embedder.as_ref())
                .map(|r| (doc_id, r))
                .map_err(|e| e.to_string())
        });
        match outcome {
            Ok((doc_id, report)) => println!("{doc_id}: {} chunks", report.chunk_count),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", file.display());
            }
        }
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn query(ctx: &Context, args: &QueryArgs) -> Result<i32, CliError> {
    let mode = PipelineMode::from(args.pipeline);
    let service = ctx.service(mode == PipelineMode::Advanced)?;
    let overrides = args.top_k.map(|k| {
        let fetch_k = if k == ctx.config.pipeline.retrieval.top_k {
            ctx.config.pipeline.retrieval.fetch_k
        } else {
            crate::store::default_fetch_k(k)
        };
        json!({ "retrieval": { "top_k": k, "fetch_k": fetch_k } })
    });
    let req = QueryRequest {
        corpus_id: args.corpus.clone(),
        question: args.question.clone(),
        pipeline: mode,
        overrides,
    };
    match service.query(&req) {
        Ok(resp) if args.json => {
            println!("{}", serde_json::to_string_pretty(&resp).expect("response serializes"));
            Ok(EXIT_OK)
        }
        Ok(resp) => {
            let mut out = format!("{}\n\nSources:\n", resp.answer);
            for (i, c) in resp.chunks.iter().enumerate() {
                let preview: String = c.text.chars().take(80).collect();
                let _ = writeln!(out, "  [{}] {} ({:.4}) {}", i + 1, c.chunk_id, c.score, preview.replace('\n', " "));
            }
            if mode == PipelineMode::Advanced {
                out.push_str("\nTrace:\n");
                for t in &resp.trace {
                    let verdict = match t.verdict {
                        Some(v) if t.parse_failed => format!("{v:?} (unparsed)"),
                        Some(v) => format!("{v:?}"),
                        None => "-".into(),
                    };
                    let _ = writeln!(out, "  {} {:?} {}", t.iteration, t.query_used, verdict.to_lowercase());
                }
                if resp.refinement_exhausted {
                    out.push_str("  refinement budget exhausted\n");
                }
            }
            print!("{out}");
            Ok(EXIT_OK)
        }
        Err(e) if e.status == 400 || e.status == 404 => Err(config_err(e.message)),
        Err(e) => Err(runtime_err(e.message)),
    }
}

fn stats(args: &StatsArgs) -> Result<i32, CliError> {
    let metas = load_manifest(&args.manifest).map_err(config_err)?;
    let report = corpus_stats(&metas).map_err(config_err)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{report}");
    }
    Ok(EXIT_OK)
}

fn serve(ctx: &Context, args: &ServeArgs) -> Result<i32, CliError> {
    let service = Arc::new(ctx.service(true)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime_err)?;
    runtime
        .block_on(super::serve(service, args.addr, ctx.config.server.max_concurrent))
        .map_err(runtime_err)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemFailure {
    pub pipeline: PipelineMode,
    pub id: String,
    pub error: String,
}

/// Contents of one `report_t<temperature>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRun {
    pub corpus_id: String,
    pub testset: String,
    pub temperature: f64,
    pub prompt_language: PromptLanguage,
    pub config: PipelineConfig,
    pub reports: BTreeMap<PipelineMode, EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<crate::eval::ComparisonTable>,
    pub failures: Vec<ItemFailure>,
}

/// SHA-256 of the JSON-serialized iteration trace.
pub fn trace_digest<T: Serialize>(trace: &T) -> String {
    let bytes = serde_json::to_vec(trace).expect("trace serializes");
    hex::encode(Sha256::digest(bytes))
}

fn temperature_tag(t: f64) -> String {
    format!("t{t}")
}

fn run_eval_command(ctx: &Context, args: &EvalArgs) -> Result<i32, CliError> {
    let items = load_testset(&args.testset).map_err(config_err)?;
    if items.is_empty() {
        return Err(config_err(format!("{}: testset is empty", args.testset.display())));
    }
    let temperatures = if args.temperature.is_empty() {
        vec![ctx.config.pipeline.generator.temperature]
    } else {
        args.temperature.clone()
    };
    let modes = args.pipeline.modes();
    let mut base = ctx.config.pipeline.clone();
    if let Some(lang) = args.prompt_language {
        base.prompt_language = lang;
    }
    for &t in &temperatures {
        let mut cfg = base.clone();
        cfg.generator.temperature = t;
        cfg.validate().map_err(config_err)?;
    }

    let registry = ctx.registry()?;
    let handle = registry
        .get(&args.corpus)
        .ok_or_else(|| config_err(format!("unknown corpus {:?}", args.corpus)))?;
    let corpus = handle.read().expect("corpus lock poisoned");
    if corpus.store().is_empty() {
        return Err(config_err(format!("corpus {:?} is empty", args.corpus)));
    }
    let embedder = ctx.embedder()?;
    let generator = ctx.chat(&base.generator)?;
    let checker = if modes.contains(&PipelineMode::Advanced) {
        ctx.chat(&base.checker)?
    } else {
        Arc::clone(&generator)
    };
    let prompts = PromptSet::default();
    let clock = SystemClock::default();
    std::fs::create_dir_all(&args.out).map_err(config_err)?;

    let mut any_failed = false;
    for &t in &temperatures {
        let tag = temperature_tag(t);
        let mut reports = BTreeMap::new();
        let mut failures = Vec::new();
        let mut cfg = base.clone();
        cfg.generator.temperature = t;
        for &mode in &modes {
            cfg.mode = mode;
            let pipeline = Pipeline::new(corpus.store(), embedder.as_ref(), generator.as_ref(), &prompts)
                .with_checker(checker.as_ref())
                .with_clock(&clock);
            let mut records = Vec::with_capacity(items.len());
            for item in &items {
                match pipeline.answer(&Query::new(item.question.clone(), args.corpus.clone()), &cfg) {
                    Ok(result) => records.push(AnswerRecord {
                        id: item.id.clone(),
                        answer: result.answer,
                        pipeline: mode.to_string(),
                        trace_digest: trace_digest(&result.trace),
                    }),
                    Err(e) => failures.push(ItemFailure {
                        pipeline: mode,
                        id: item.id.clone(),
                        error: e.to_string(),
                    }),
                }
            }
            write_answers(&args.out.join(format!("answers_{mode}_{tag}.jsonl")), &records)?;
            let answered: HashMap<String, String> =
                records.into_iter().map(|r| (r.id, r.answer)).collect();
            let scored: Vec<QaItem> = items
                .iter()
                .filter(|i| answered.get(&i.id).is_some_and(|a| !a.trim().is_empty()))
                .cloned()
                .collect();
            for item in items.iter().filter(|i| answered.get(&i.id).is_some_and(|a| a.trim().is_empty())) {
                failures.push(ItemFailure {
                    pipeline: mode,
                    id: item.id.clone(),
                    error: "empty answer".into(),
                });
            }
            if !scored.is_empty() {
                let report = semantic_similarity_eval(&answered, &scored, embedder.as_ref()).map_err(runtime_err)?;
                reports.insert(mode, report);
            }
        }
        let comparison = match (reports.get(&PipelineMode::Vanilla), reports.get(&PipelineMode::Advanced)) {
            (Some(v), Some(a)) => compare_pipelines(v, a).ok(),
            _ => None,
        };
        for f in &failures {
            eprintln!("{tag} {} {}: {}", f.pipeline, f.id, f.error);
        }
        any_failed |= !failures.is_empty();
        cfg.mode = base.mode;
        let run = EvalRun {
            corpus_id: args.corpus.clone(),
            testset: args.testset.display().to_string(),
            temperature: t,
            prompt_language: cfg.prompt_language,
            config: cfg,
            reports,
            comparison,
            failures,
        };
        let path = args.out.join(format!("report_{tag}.json"));
        write_atomic(&path, &serde_json::to_vec_pretty(&run).expect("report serializes"))?;
        if let Some(table) = &run.comparison {
            let text = table.render();
            write_atomic(&args.out.join(format!("report_{tag}.txt")), text.as_bytes())?;
            println!("temperature {t}\n{text}");
        } else {
            for (mode, r) in &run.reports {
                println!("temperature {t} {mode}: {}", crate::eval::format_mu_sigma(r.mean, r.std));
            }
        }
    }
    Ok(if any_failed { EXIT_FAILURE } else { EXIT_OK })
}

fn write_answers(path: &Path, records: &[AnswerRecord]) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("record serializes");
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(runtime_err)?;
    tmp.write_all(bytes).map_err(runtime_err)?;
    tmp.persist(path).map_err(runtime_err)?;
    Ok(())
}
