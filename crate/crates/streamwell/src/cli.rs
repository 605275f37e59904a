//! The `streamwell` command line.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use streamwell_core::evaluation::{aggregate, evaluate, new_retriever, sweep_memory, QueryAccumulator};
use streamwell_core::simulation::{build_long_streams, synth_generate, synthetic_embedding};
use streamwell_core::{
    Clip, EmbeddingTable, EvalMode, EvalReport, MemoryCandidate, MethodKind, Query, Ranked,
    RelevanceMatrix, RetrievalMethod, ScoredStream, Stream, StreamSet, SynthSpec,
};

use crate::bench::{run_bench, BenchConfig, BenchRow};
use crate::config::RunConfig;
use crate::formats::embedding::{read_embedding_text, write_embedding_text};
use crate::formats::lexicon::write_lexicon;
use crate::formats::manifest::{load_manifest_with, Manifest};
use crate::formats::queries::parse_queries;
use crate::formats::rankings::{read_records, write_record, RankingRecord};
use crate::formats::scores::write_frame_file;
use crate::formats::snapshot::{parse_snapshot, write_snapshot};
use crate::formats::FormatError;
use crate::pipeline::{prepare_queries, QueryPlan};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_PARTIAL: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    /// The run finished but some queries could not be processed.
    #[error("{0}")]
    Partial(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Partial(_) => EXIT_PARTIAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io { .. } | FormatError::Read(_) => CliError::Io(e.to_string()),
            FormatError::InFile { ref source, .. }
                if matches!(**source, FormatError::Io { .. } | FormatError::Read(_)) =>
            {
                CliError::Io(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<streamwell_core::Error> for CliError {
    fn from(e: streamwell_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "streamwell", version, about = "Zero-shot retrieval over concurrent concept-score streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic drifting-topic streams with planted concepts.
    Synth(SynthArgs),
    /// Concatenate short labeled clips into long streams.
    Simulate(SimulateArgs),
    /// Rank streams for each query at every timestep (JSON lines).
    Rank(RankArgs),
    /// Compute TAP and/or zap precision.
    Evaluate(EvaluateArgs),
    /// Pick the memory length with the best mean TAP.
    Sweep(SweepArgs),
    /// Time one scoring step for growing stream counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory to write into; created if needed.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = SynthSpec::default().streams)]
    pub streams: usize,
    #[arg(long, default_value_t = SynthSpec::default().concepts)]
    pub concepts: usize,
    /// Frames per stream.
    #[arg(long, default_value_t = SynthSpec::default().frames)]
    pub frames: usize,
    /// Shortest topic segment, in frames.
    #[arg(long, default_value_t = SynthSpec::default().topic_min)]
    pub topic_min: usize,
    /// Longest topic segment, in frames.
    #[arg(long, default_value_t = SynthSpec::default().topic_max)]
    pub topic_max: usize,
    /// Softmax mass of the planted concept.
    #[arg(long, default_value_t = SynthSpec::default().strength)]
    pub strength: f64,
    /// Probability that a frame's signal lands on a wrong concept.
    #[arg(long, default_value_t = SynthSpec::default().noise)]
    pub noise: f64,
    #[arg(long, default_value_t = SynthSpec::default().fps)]
    pub fps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Manifest of the short clips (same format as stream manifests).
    #[arg(long)]
    pub clips: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of long streams.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 1800.0)]
    pub min_duration_s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub fps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
    /// Save well states after the last processed frame.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    /// Start from saved well states instead of empty wells.
    #[arg(long)]
    pub resume_from: Option<PathBuf>,
    /// First frame to process.
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    /// Stop before this frame.
    #[arg(long)]
    pub until: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Instant,
    Continuous,
    Both,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Instant => EvalMode::Instant,
            ModeArg::Continuous => EvalMode::Continuous,
            ModeArg::Both => EvalMode::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Rankings written by `rank`; when absent, retrieval runs from the raw inputs.
    #[arg(long)]
    pub rankings: Option<PathBuf>,
    /// Per-timestep AP table (instant mode).
    #[arg(long)]
    pub ap_csv: Option<PathBuf>,
    /// Per-timestep zap events (continuous mode).
    #[arg(long)]
    pub zap_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
    /// Memory lengths to try, in frames; `full` uses the whole history.
    #[arg(long, default_value = "1,5,15,25,50,200,full")]
    pub m_list: String,
    /// Held-out queries, checked to be disjoint from the validation queries.
    #[arg(long)]
    pub test_queries: Option<PathBuf>,
    /// (m, mean TAP) table for plotting.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Stream counts to time.
    #[arg(long, default_value = "100,200")]
    pub n_list: String,
    #[arg(long, default_value_t = 1000)]
    pub concepts: usize,
    /// Terms in the benchmark query.
    #[arg(long, default_value_t = 2)]
    pub terms: usize,
    #[arg(long, default_value_t = 15)]
    pub reps: usize,
    /// Timesteps per repetition.
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value = "well")]
    pub method: String,
    #[arg(long, default_value_t = 25)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Runs a parsed command, writing streaming output to `stdout` and
/// diagnostics to `stderr`.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a, stderr),
        Command::Simulate(a) => cmd_simulate(&a, stderr),
        Command::Rank(a) => cmd_rank(&a, stdout, stderr),
        Command::Evaluate(a) => cmd_evaluate(&a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(&a, stdout, stderr),
        Command::Bench(a) => cmd_bench(&a, stdout, stderr),
    }
}

fn warn(stderr: &mut dyn Write, message: impl std::fmt::Display) {
    let _ = writeln!(stderr, "warning: {message}");
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult {
    let mut out = create(path)?;
    write(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(path, e))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value, stdout: &mut dyn Write) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("json values serialize") + "\n";
    match path {
        Some(p) => write_file(p, |w| w.write_all(text.as_bytes())),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn write_stream_files(set: &StreamSet, dir: &Path) -> CliResult {
    let lexicon_path = dir.join("lexicon.txt");
    write_file(&lexicon_path, |w| write_lexicon(set.lexicon(), w))?;
    for s in set.streams() {
        let path = dir.join("streams").join(format!("{}.scores", s.id()));
        write_file(&path, |w| {
            write_frame_file(s.id(), s.meta.fps, s.provenance, set.lexicon().len(), &s.frames, w)
        })?;
    }
    let manifest = Manifest::describe(set, "lexicon.txt", "streams");
    let path = dir.join("manifest.toml");
    write_file(&path, |w| w.write_all(manifest.to_toml().as_bytes()))
}

fn cmd_synth(args: &SynthArgs, stderr: &mut dyn Write) -> CliResult {
    let spec = SynthSpec {
        streams: args.streams,
        concepts: args.concepts,
        frames: args.frames,
        topic_min: args.topic_min,
        topic_max: args.topic_max,
        strength: args.strength,
        noise: args.noise,
        fps: args.fps,
        seed: args.seed,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(format!("invalid synth spec: {e}")))?;
    let set = synth_generate(&spec)?;
    let table = synthetic_embedding(set.lexicon())?;
    let dir = &args.out_dir;
    write_stream_files(&set, dir)?;
    write_file(&dir.join("embeddings.txt"), |w| write_embedding_text(&table, w))?;
    write_file(&dir.join("queries.txt"), |w| {
        set.lexicon()
            .names()
            .iter()
            .try_for_each(|n| writeln!(w, "{n}"))
    })?;
    let provenance = json!({
        "generator": "synth",
        "seed": spec.seed,
        "spec": spec,
    });
    write_json(Some(&dir.join("provenance.json")), &provenance, stderr)?;
    let _ = writeln!(stderr, "wrote {} streams to {}", set.len(), dir.display());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, stderr: &mut dyn Write) -> CliResult {
    if !args.clips.exists() {
        return Err(CliError::Io(format!("{}: clip manifest not found", args.clips.display())));
    }
    let clips_set = load_manifest_with(&args.clips, None)?;
    let provenance = clips_set
        .streams()
        .first()
        .map(|s| s.provenance)
        .ok_or_else(|| CliError::Data(streamwell_core::Error::EmptyClips.to_string()))?;
    let lexicon = clips_set.lexicon().clone();
    let clips: Vec<Clip> = clips_set.streams().iter().cloned().map(Clip::from).collect();
    let long = build_long_streams(&clips, args.count, args.min_duration_s, args.fps, args.seed)
        .map_err(|e| match e {
            streamwell_core::Error::InvalidParameter(m) => CliError::Usage(m),
            other => other.into(),
        })?;
    let segments: Vec<_> = long
        .iter()
        .map(|s| json!({ "stream_id": s.stream_id, "segments": s.segments }))
        .collect();
    let streams = long
        .into_iter()
        .map(|s| s.into_stream(args.fps, provenance))
        .collect::<Result<Vec<Stream>, _>>()?;
    let set = StreamSet::new(lexicon, streams)?;
    write_stream_files(&set, &args.out_dir)?;
    let provenance = json!({
        "generator": "simulate",
        "seed": args.seed,
        "clips": args.clips.display().to_string(),
        "count": args.count,
        "min_duration_s": args.min_duration_s,
        "fps": args.fps,
        "streams": segments,
    });
    write_json(Some(&args.out_dir.join("provenance.json")), &provenance, stderr)?;
    let _ = writeln!(stderr, "wrote {} streams to {}", set.len(), args.out_dir.display());
    Ok(())
}

fn resolve_config(file: Option<&Path>, flags: &RunConfig) -> CliResult<RunConfig> {
    let base = match file {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Io(format!("{}: config file not found", p.display())));
            }
            RunConfig::load(p).map_err(CliError::Usage)?
        }
        None => RunConfig::default(),
    };
    let cfg = base.overlay(flags.clone());
    if let Some(p) = cfg.missing_paths().first() {
        return Err(CliError::Io(format!("{}: no such file", p.display())));
    }
    Ok(cfg)
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn load_set(cfg: &RunConfig) -> CliResult<StreamSet> {
    let manifest = required(&cfg.manifest, "manifest")?;
    Ok(load_manifest_with(manifest, cfg.lexicon.as_deref())?)
}

fn load_embeddings(cfg: &RunConfig, stderr: &mut dyn Write) -> CliResult<EmbeddingTable> {
    let path = required(&cfg.embeddings, "embeddings")?;
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let (table, warnings) =
        read_embedding_text(BufReader::new(file)).map_err(|e| CliError::from(e.in_file(path)))?;
    for w in warnings {
        warn(stderr, format_args!("{}: {w}", path.display()));
    }
    Ok(table)
}

fn read_query_file(path: &Path) -> CliResult<Vec<String>> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    parse_queries(BufReader::new(file)).map_err(|e| io_error(path, e))
}

fn load_queries(cfg: &RunConfig) -> CliResult<Vec<String>> {
    let mut queries = match &cfg.queries_file {
        Some(path) => read_query_file(path)?,
        None => Vec::new(),
    };
    queries.extend(cfg.query.iter().cloned());
    if queries.is_empty() {
        return Err(CliError::Usage("no queries given (use --queries or --query)".into()));
    }
    Ok(queries)
}

fn build_method(cfg: &RunConfig) -> CliResult<RetrievalMethod> {
    let name = required(&cfg.method, "method")?;
    let kind: MethodKind = name
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown method {name:?}")))?;
    let mut method = RetrievalMethod::new(kind)
        .with_beta(cfg.beta)
        .with_seed(cfg.seed.unwrap_or(0));
    if kind.uses_m() {
        method = method.with_m(*required(&cfg.m, "m")?);
    }
    if let Some(k) = cfg.k {
        method = method.with_k(k);
    }
    method
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(method)
}

fn report_plan(plan: &QueryPlan, stderr: &mut dyn Write) {
    for w in &plan.warnings {
        warn(stderr, w);
    }
    for (query, e) in &plan.failed {
        warn(stderr, format_args!("query {query:?} skipped: {e}"));
    }
}

fn partial_failure(plan: &QueryPlan) -> CliResult {
    if plan.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Partial(format!(
            "{} of {} queries could not be processed",
            plan.failed.len(),
            plan.failed.len() + plan.prepared.len()
        )))
    }
}

fn cmd_rank(args: &RankArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let cfg = resolve_config(args.config.as_deref(), &args.run)?;
    let method = build_method(&cfg)?;
    if (args.snapshot_out.is_some() || args.resume_from.is_some()) && method.kind != MethodKind::Well {
        return Err(CliError::Usage("snapshots are only supported for --method well".into()));
    }
    if let Some(p) = args.resume_from.as_deref().filter(|p| !p.exists()) {
        return Err(CliError::Io(format!("{}: no such file", p.display())));
    }
    let set = load_set(&cfg)?;
    let table = load_embeddings(&cfg, stderr)?;
    let queries = load_queries(&cfg)?;
    let plan = prepare_queries(&table, set.lexicon(), &queries);
    report_plan(&plan, stderr);

    let mut out: Box<dyn Write + '_> = match &cfg.out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(stdout)),
    };
    let out_name = cfg
        .out
        .as_ref()
        .map_or_else(|| "stdout".to_string(), |p| p.display().to_string());
    let until = args.until.unwrap_or(usize::MAX).min(set.horizon());

    if !plan.prepared.is_empty() {
        let mut retriever = new_retriever(&set, &method, &plan.prepared)?;
        if let Some(path) = &args.resume_from {
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            let saved = parse_snapshot(BufReader::new(file)).map_err(|e| CliError::from(e.in_file(path)))?;
            restore_wells(&mut retriever, &set, saved, path)?;
        }
        let ids: Vec<&str> = set.streams().iter().map(|s| s.id()).collect();
        let mut live = Vec::with_capacity(set.len());
        let mut ranked: Vec<Ranked> = Vec::with_capacity(set.len());
        for t in args.from..until {
            live.clear();
            for (i, s) in set.streams().iter().enumerate() {
                if let Some(frame) = s.frames.get(t) {
                    retriever.observe(i, t, frame.values())?;
                    live.push(i);
                }
            }
            for (q, query) in plan.prepared.iter().enumerate() {
                retriever.rank(q, &live, &mut ranked)?;
                let record = RankingRecord {
                    query: query.text.clone(),
                    t,
                    ranking: ranked
                        .iter()
                        .map(|r| ScoredStream::new(ids[r.stream], r.score))
                        .collect(),
                };
                write_record(&record, &mut out).map_err(|e| CliError::Io(format!("{out_name}: {e}")))?;
            }
        }
        if let Some(path) = &args.snapshot_out {
            let wells: Vec<_> = ids
                .iter()
                .enumerate()
                .filter_map(|(i, id)| retriever.well(i).map(|w| (*id, w)))
                .collect();
            write_file(path, |w| write_snapshot(wells.iter().copied(), w))?;
        }
    }
    out.flush().map_err(|e| CliError::Io(format!("{out_name}: {e}")))?;
    drop(out);

    if let Some(p) = &cfg.out {
        let mut meta_path = p.clone().into_os_string();
        meta_path.push(".meta.json");
        let meta = json!({
            "seed": method.seed,
            "method": method,
            "queries": plan.prepared.iter().map(|q| &q.text).collect::<Vec<_>>(),
            "failed_queries": plan.failed.iter().map(|(q, _)| q).collect::<Vec<_>>(),
            "from": args.from,
            "until": until,
        });
        write_json(Some(Path::new(&meta_path)), &meta, stderr)?;
    }
    if plan.prepared.is_empty() {
        return Err(CliError::Partial("no query could be encoded".into()));
    }
    partial_failure(&plan)
}

fn restore_wells(
    retriever: &mut streamwell_core::Retriever,
    set: &StreamSet,
    saved: Vec<(String, streamwell_core::WellState)>,
    path: &Path,
) -> CliResult {
    let mut by_id: BTreeMap<String, streamwell_core::WellState> = BTreeMap::new();
    for (id, state) in saved {
        if set.stream_index(&id).is_none() {
            return Err(CliError::Data(format!("{}: unknown stream {id:?}", path.display())));
        }
        if by_id.insert(id.clone(), state).is_some() {
            return Err(CliError::Data(format!("{}: stream {id:?} saved twice", path.display())));
        }
    }
    for (i, s) in set.streams().iter().enumerate() {
        let state = by_id
            .remove(s.id())
            .ok_or_else(|| CliError::Data(format!("{}: no state for stream {:?}", path.display(), s.id())))?;
        let current = retriever.well(i).expect("well method has wells");
        if state.m() != current.m() || state.beta() != current.beta() {
            return Err(CliError::Data(format!(
                "{}: stream {:?} was saved with m={} beta={}, run uses m={} beta={}",
                path.display(),
                s.id(),
                state.m(),
                state.beta(),
                current.m(),
                current.beta()
            )));
        }
        retriever.restore_well(i, state)?;
    }
    Ok(())
}

fn evaluate_rankings(
    set: &StreamSet,
    records: Vec<RankingRecord>,
    mode: EvalMode,
    path: &Path,
) -> CliResult<EvalReport> {
    let data = |msg: String| CliError::Data(format!("{}: {msg}", path.display()));
    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<RankingRecord>> = BTreeMap::new();
    for r in records {
        let label = Query::parse(&r.query)
            .map_err(|e| data(e.to_string()))?
            .normalized();
        if !grouped.contains_key(&label) {
            order.push(label.clone());
        }
        grouped.entry(label).or_default().push(r);
    }
    if order.is_empty() {
        return Err(data("no rankings".into()));
    }
    let mut per_query = Vec::with_capacity(order.len());
    let mut indices = Vec::with_capacity(set.len());
    for label in order {
        let mut rows = grouped.remove(&label).unwrap_or_default();
        rows.sort_by_key(|r| r.t);
        if rows.len() != set.horizon() || rows.iter().enumerate().any(|(t, r)| r.t != t) {
            return Err(data(format!(
                "query {label:?} needs exactly one ranking for each of {} timesteps",
                set.horizon()
            )));
        }
        let mut acc = QueryAccumulator::new(RelevanceMatrix::from_set(set, &label), mode);
        for r in &rows {
            indices.clear();
            for s in &r.ranking {
                indices.push(
                    set.stream_index(&s.stream)
                        .ok_or_else(|| data(format!("t={}: unknown stream {:?}", r.t, s.stream)))?,
                );
            }
            acc.push(&indices)
                .map_err(|e| data(format!("query {label:?} t={}: {e}", r.t)))?;
        }
        per_query.push(acc.finish(label)?);
    }
    Ok(aggregate(None, mode, per_query)?)
}

fn first_fps(set: &StreamSet) -> Option<f64> {
    set.streams().first().map(|s| s.meta.fps)
}

fn cmd_evaluate(args: &EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let mode = EvalMode::from(args.mode);
    if args.ap_csv.is_some() && !mode.instant() {
        return Err(CliError::Usage("--ap-csv needs --mode instant or both".into()));
    }
    if args.zap_csv.is_some() && !mode.continuous() {
        return Err(CliError::Usage("--zap-csv needs --mode continuous or both".into()));
    }
    let cfg = resolve_config(args.config.as_deref(), &args.run)?;
    let mut plan = None;
    let report = match &args.rankings {
        Some(path) => {
            if cfg.method.is_some() || cfg.embeddings.is_some() {
                return Err(CliError::Usage(
                    "--rankings cannot be combined with --method or --embeddings".into(),
                ));
            }
            let set = load_set(&cfg)?;
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            let records = read_records(BufReader::new(file)).map_err(|e| CliError::from(e.in_file(path)))?;
            let report = evaluate_rankings(&set, records, mode, path)?;
            (report, first_fps(&set))
        }
        None => {
            let method = build_method(&cfg)?;
            let set = load_set(&cfg)?;
            let table = load_embeddings(&cfg, stderr)?;
            let queries = load_queries(&cfg)?;
            let p = prepare_queries(&table, set.lexicon(), &queries);
            report_plan(&p, stderr);
            if p.prepared.is_empty() {
                return Err(CliError::Partial("no query could be encoded".into()));
            }
            let report = evaluate(&set, &method, &p.prepared, mode)?;
            plan = Some(p);
            (report, first_fps(&set))
        }
    };
    let (report, fps) = report;
    for q in &report.excluded {
        warn(stderr, format_args!("query {q:?} has no relevant timestep; left out of the means"));
    }
    if report.excluded.len() == report.queries.len() {
        return Err(CliError::Data(streamwell_core::Error::NoRelevantTime.to_string()));
    }
    let doc = json!({
        "seed": report.method.as_ref().map_or(cfg.seed.unwrap_or(0), |m| m.seed),
        "fps": fps,
        "report": report,
    });
    write_json(cfg.out.as_deref(), &doc, stdout)?;
    if let Some(path) = &args.ap_csv {
        write_file(path, |w| {
            writeln!(w, "query,t,ap")?;
            for q in &report.queries {
                for (t, ap) in q.ap_trace.iter().enumerate() {
                    let ap = ap.map(|v| v.to_string()).unwrap_or_default();
                    writeln!(w, "{},{t},{ap}", csv_field(&q.query))?;
                }
            }
            Ok(())
        })?;
    }
    if let Some(path) = &args.zap_csv {
        write_file(path, |w| {
            writeln!(w, "query,t,event")?;
            for q in &report.queries {
                for (t, e) in q.zaps.iter().flat_map(|z| z.events.iter()).enumerate() {
                    writeln!(w, "{},{t},{}", csv_field(&q.query), e.as_str())?;
                }
            }
            Ok(())
        })?;
    }
    match plan {
        Some(p) => partial_failure(&p),
        None => Ok(()),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Parses a comma-separated list of memory lengths (`full` allowed).
pub fn parse_m_list(text: &str) -> CliResult<Vec<MemoryCandidate>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage("--m-list is empty".into()));
    }
    items
        .into_iter()
        .map(|s| match s {
            "full" => Ok(MemoryCandidate::Full),
            _ => match s.parse::<usize>() {
                Ok(m) if m > 0 => Ok(MemoryCandidate::Frames(m)),
                _ => Err(CliError::Usage(format!("bad memory length {s:?}"))),
            },
        })
        .collect()
}

fn candidate_json(c: MemoryCandidate) -> serde_json::Value {
    match c {
        MemoryCandidate::Frames(m) => json!(m),
        MemoryCandidate::Full => json!("full"),
    }
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult {
    let candidates = parse_m_list(&args.m_list)?;
    let mut cfg = resolve_config(args.config.as_deref(), &args.run)?;
    // The swept memory length replaces any configured one.
    cfg.m = cfg.m.or(Some(1));
    let method = build_method(&cfg)?;
    if !method.kind.uses_m() {
        return Err(CliError::Usage(format!("method {} has no memory length to sweep", method.kind)));
    }
    let set = load_set(&cfg)?;
    let table = load_embeddings(&cfg, stderr)?;
    let queries = load_queries(&cfg)?;
    if let Some(path) = &args.test_queries {
        let normalize = |q: &String| Query::parse(q).map(|q| q.normalized()).ok();
        let test: Vec<String> = read_query_file(path)?.iter().filter_map(normalize).collect();
        if let Some(shared) = queries.iter().filter_map(normalize).find(|q| test.contains(q)) {
            return Err(CliError::Usage(format!(
                "query {shared:?} is in both the validation and the test queries"
            )));
        }
    }
    let plan = prepare_queries(&table, set.lexicon(), &queries);
    report_plan(&plan, stderr);
    if plan.prepared.is_empty() {
        return Err(CliError::Partial("no query could be encoded".into()));
    }
    let result = sweep_memory(&set, &plan.prepared, &method, &candidates)?;
    let doc = json!({
        "seed": method.seed,
        "method": method.kind,
        "queries": plan.prepared.iter().map(|q| &q.text).collect::<Vec<_>>(),
        "rows": result
            .rows
            .iter()
            .map(|r| json!({ "m": candidate_json(r.candidate), "mean_tap": r.mean_tap }))
            .collect::<Vec<_>>(),
        "m_star": candidate_json(result.m_star),
    });
    write_json(cfg.out.as_deref(), &doc, stdout)?;
    if let Some(path) = &args.csv {
        write_file(path, |w| {
            writeln!(w, "m,mean_tap")?;
            for r in &result.rows {
                writeln!(w, "{},{}", r.candidate, r.mean_tap)?;
            }
            Ok(())
        })?;
    }
    partial_failure(&plan)
}

fn parse_n_list(text: &str) -> CliResult<Vec<usize>> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(CliError::Usage("--n-list is empty".into()));
    }
    items
        .into_iter()
        .map(|s| match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Usage(format!("bad stream count {s:?}"))),
        })
        .collect()
}

/// Minimum repetitions behind a reported median.
pub const MIN_BENCH_REPS: usize = 10;

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> CliResult {
    if args.reps < MIN_BENCH_REPS {
        return Err(CliError::Usage(format!("--reps must be at least {MIN_BENCH_REPS}")));
    }
    let kind: MethodKind = args
        .method
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown method {:?}", args.method)))?;
    let cfg = BenchConfig {
        n_list: parse_n_list(&args.n_list)?,
        concepts: args.concepts,
        terms: args.terms,
        reps: args.reps,
        steps_per_rep: args.steps,
        method: RetrievalMethod::new(kind).with_m(args.m).with_seed(args.seed),
        seed: args.seed,
    };
    let rows = run_bench(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let doc = json!({
        "seed": args.seed,
        "concepts": args.concepts,
        "terms": args.terms,
        "method": kind,
        "m": args.m,
        "rows": rows,
    });
    write_json(args.out.as_deref(), &doc, stdout)?;
    if let Some(path) = &args.csv {
        write_file(path, |w| {
            writeln!(w, "{}", BenchRow::CSV_HEADER)?;
            rows.iter().try_for_each(|r| writeln!(w, "{}", r.csv()))
        })?;
    }
    Ok(())
}
