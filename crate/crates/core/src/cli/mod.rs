//! `facewall` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 input error, 3 store error.
//! Diagnostics go to stderr; one-line machine-readable summaries to stdout.

mod chart;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classify::{EmotionLexicon, TrainConfig};
use crate::config::AnalysisConfig;
use crate::exec::Execution;
use crate::ingest::{load_corpus, Format};
use crate::pipeline::{self, ModelStatus, NGRAMS_FILE, SERIES_FILE};
use crate::store::{Store, StoreError};
use crate::synth::{generate, SynthConfig};
use crate::timeline::{detect, DetectorConfig, DeviationReport, Granularity, Scope, SeriesClass};

pub use chart::{polyline_vertices, render_svg};

#[derive(Debug, Parser)]
#[command(name = "facewall", version, about = "Emotion timelines and behavioural-shift flags from wall posts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a JSONL or CSV corpus into the store.
    Ingest(IngestArgs),
    /// Label every stored post and write per-user series and n-gram profiles.
    Analyze(AnalyzeArgs),
    /// Draw one series as an SVG line chart.
    Chart(ChartArgs),
    /// Flag anomalous buckets per user and write a JSON report.
    Detect(DetectArgs),
    /// Export a series or n-gram table as CSV.
    Export(ExportArgs),
    /// Write a seeded synthetic corpus (JSONL).
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    store: PathBuf,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, value_enum, default_value_t = Granularity::Month)]
    bucket: Granularity,
    /// Highest n-gram order.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u16).range(1..))]
    ngrams: u16,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Laplace smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Classes with fewer emoticon-labelled posts are left out of training.
    #[arg(long, default_value_t = 5)]
    min_train_docs: usize,
    /// Disable data-parallel execution.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct ChartArgs {
    #[arg(long)]
    store: PathBuf,
    /// happy, sad, love, disappointment, neutral or volume.
    #[arg(long)]
    class: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, conflicts_with = "all_users")]
    user: Option<String>,
    #[arg(long)]
    all_users: bool,
    #[arg(long, default_value_t = 960)]
    width: u32,
    #[arg(long, default_value_t = 420)]
    height: u32,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long, default_value_t = 6)]
    window: usize,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    z: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    jsd: f64,
    #[arg(long, default_value_t = 3)]
    min_hits: u64,
    #[arg(long, default_value_t = 5)]
    min_total: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    store: PathBuf,
    /// series or ngrams.
    #[arg(long)]
    what: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    user: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().users)]
    users: usize,
    #[arg(long, default_value_t = SynthConfig::default().ramped_users)]
    ramped: usize,
    #[arg(long, default_value_t = SynthConfig::default().mean_posts_per_month)]
    posts_per_month: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Input = 2,
    Store = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::Usage,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::Input,
            message: message.into(),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError {
            exit: Exit::Store,
            message: e.to_string(),
        }
    }
}

pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Exit::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("facewall: {}", e.message);
            ExitCode::from(e.exit as u8)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Chart(a) => cmd_chart(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Export(a) => cmd_export(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn exec_mode(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_ingest(args: IngestArgs) -> Result<(), CliError> {
    let batch = load_corpus(&args.input, args.format)
        .map_err(|e| CliError::input(format!("{}: {e}", args.input.display())))?;
    for (line, reason) in &batch.rejected {
        eprintln!("{}:{line}: rejected: {reason}", args.input.display());
    }
    let store = Store::create(&args.store)?;
    let _lock = store.lock()?;
    let receipt = store.append(&batch)?;
    println!(
        "ingested={} rejected={} duplicates={}",
        receipt.written,
        batch.rejected.len(),
        batch.duplicates_dropped as u64 + receipt.skipped
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    if !(args.alpha.is_finite() && args.alpha > 0.0) {
        return Err(CliError::usage("--alpha must be positive"));
    }
    let lexicon = match &args.lexicon {
        Some(path) => EmotionLexicon::load(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        None => EmotionLexicon::builtin(),
    };
    let config = AnalysisConfig {
        granularity: args.bucket,
        train: TrainConfig {
            n_max: usize::from(args.ngrams),
            alpha: args.alpha,
            min_train_docs: args.min_train_docs,
        },
        lexicon,
    };
    let hash = config.hash();

    let store = Store::open(&args.store)?;
    let _lock = store.lock()?;
    let posts = store.read_posts()?;
    if posts.is_empty() {
        eprintln!("store is empty; nothing to analyze");
        println!("users=0 posts=0 config={hash}");
        return Ok(());
    }

    if let Ok(info) = pipeline::load_info(&store, &hash) {
        if info.record_count == posts.len() as u64 {
            let mut manifest = store.manifest()?;
            manifest.config_hash = Some(hash.clone());
            manifest.analyzed_record_count = Some(info.record_count);
            store.write_manifest(&manifest)?;
            eprintln!("reusing cached analysis {hash}");
            println!("users={} posts={} cached=true config={hash}", info.users.len(), posts.len());
            return Ok(());
        }
    }

    let analysis = pipeline::analyze(&posts, &config, exec_mode(args.sequential));
    if analysis.summary.model == ModelStatus::Untrainable {
        eprintln!("warning: model=untrainable (fewer than two classes with {} emoticon-labelled posts); rule-based labels only", config.train.min_train_docs);
    }
    pipeline::persist(&store, &analysis)?;
    let model = match analysis.summary.model {
        ModelStatus::Trained => "trained",
        ModelStatus::Untrainable => "untrainable",
    };
    println!(
        "users={} posts={} model={model} config={hash}",
        analysis.users.len(),
        posts.len()
    );
    Ok(())
}

fn resolve_scope(user: Option<String>, info: &pipeline::AnalysisInfo) -> Result<Scope, CliError> {
    match user {
        Some(u) if info.users.contains(&u) => Ok(Scope::User(u)),
        Some(u) => Err(CliError::input(format!("unknown user {u:?}"))),
        None => Ok(Scope::AllUsers),
    }
}

fn cmd_chart(args: ChartArgs) -> Result<(), CliError> {
    let class: SeriesClass = args.class.parse().map_err(CliError::input)?;
    if args.width < 100 || args.height < 100 {
        return Err(CliError::usage("chart must be at least 100x100"));
    }
    let store = Store::open(&args.store)?;
    let _lock = store.lock()?;
    let hash = store.current_analysis()?;
    let info = pipeline::load_info(&store, &hash)?;
    let scope = resolve_scope(args.user, &info)?;
    let table = pipeline::load_series(&store, &hash, &scope)?;
    let svg = render_svg(&table.series(class), info.granularity, args.width, args.height);
    write_output(&args.out, svg.as_bytes())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    config_hash: &'a str,
    reports: Vec<DeviationReport>,
}

fn cmd_detect(args: DetectArgs) -> Result<(), CliError> {
    let config = DetectorConfig {
        window: args.window,
        z_thresh: args.z,
        jsd_thresh: args.jsd,
        min_hits: args.min_hits,
        min_total: args.min_total,
    };
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;

    let store = Store::open(&args.store)?;
    let _lock = store.lock()?;
    let hash = store.current_analysis()?;
    let info = pipeline::load_info(&store, &hash)?;
    let users: Vec<String> = info.users.iter().cloned().collect();
    let tables = exec_mode(args.sequential).map(&users, |u| {
        pipeline::load_series(&store, &hash, &Scope::User(u.clone())).map(|t| (u.clone(), t))
    });
    let mut reports = Vec::with_capacity(users.len());
    for loaded in tables {
        let (user, table) = loaded?;
        let report = detect(&user, &table, config).map_err(|e| CliError::usage(e.to_string()))?;
        reports.push(report);
    }
    let flagged = reports.iter().filter(|r| !r.flags.is_empty()).count();
    let flags: usize = reports.iter().map(|r| r.flags.len()).sum();
    let file = ReportFile {
        config_hash: &hash,
        reports,
    };
    let mut json = serde_json::to_vec_pretty(&file).expect("report serializes");
    json.push(b'\n');
    write_output(&args.out, &json)?;
    println!("users={} flagged_users={flagged} flags={flags}", users.len());
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    let file = match args.what.as_str() {
        "series" => SERIES_FILE,
        "ngrams" => NGRAMS_FILE,
        other => return Err(CliError::input(format!("unknown --what {other:?} (series|ngrams)"))),
    };
    let store = Store::open(&args.store)?;
    let _lock = store.lock()?;
    let hash = store.current_analysis()?;
    let info = pipeline::load_info(&store, &hash)?;
    let dir = match resolve_scope(args.user, &info)? {
        Scope::User(u) => store.user_dir(&u, &hash),
        Scope::AllUsers => store.aggregate_dir(&hash),
    };
    let bytes = fs::read(dir.join(file)).map_err(StoreError::from)?;
    write_output(&args.out, &bytes)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if args.ramped > args.users {
        return Err(CliError::usage("--ramped cannot exceed --users"));
    }
    if !(args.posts_per_month.is_finite() && args.posts_per_month > 0.0) {
        return Err(CliError::usage("--posts-per-month must be positive"));
    }
    let corpus = generate(&SynthConfig {
        seed: args.seed,
        users: args.users,
        ramped_users: args.ramped,
        mean_posts_per_month: args.posts_per_month,
        ..SynthConfig::default()
    });
    let mut out = Vec::new();
    for p in &corpus.posts {
        serde_json::to_writer(&mut out, p).expect("post serializes");
        out.push(b'\n');
    }
    write_output(&args.out, &out)?;
    eprintln!("ramped users: {}", corpus.ramped.join(","));
    println!("posts={} users={} ramped={}", corpus.posts.len(), args.users, corpus.ramped.len());
    Ok(())
}
