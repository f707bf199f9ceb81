use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use forge_bench::{
    aggregate, load_tasks, plan_samples, run_strategy, write_tasks, BenchError, CompositionTask,
    ExternalStrategy, ReuseStrategy, RunConfig, SampleSpec, Strategy, TaskRecord,
};
use forge_core::{MatchMode, MeasureSettings};
use forge_store::{QueryOptions, Rank, Source, Store, StoreBuilder, StoreError};
use serde::Deserialize;

use crate::api::{self, ApiError, ApiQueryRequest, MetricsRequest};
use crate::http::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "regex-forge", version, about = "Find reusable regexes from example strings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or extend a store from JSONL pattern records.
    Ingest(IngestArgs),
    /// Run one query against a store.
    Query(QueryArgs),
    /// Compare two patterns.
    Metrics(MetricsArgs),
    /// Benchmark sampling, runs and reports.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Serve the HTTP/JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct DbArg {
    /// Store directory.
    #[arg(long, env = "REGEX_FORGE_DB")]
    db: PathBuf,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    db: DbArg,
    /// JSONL files with {"pattern", "source", "origin"} records; "-" reads stdin.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Source for records that do not name one.
    #[arg(long)]
    source: Option<Source>,
    #[arg(long, default_value_t = 16)]
    shards: usize,
    /// Add to the existing store instead of replacing it.
    #[arg(long)]
    append: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[command(flatten)]
    db: DbArg,
    /// Positive example; repeatable.
    #[arg(short = 'p', long = "positive")]
    positives: Vec<String>,
    /// Negative example; repeatable.
    #[arg(short = 'n', long = "negative")]
    negatives: Vec<String>,
    /// JSON file with "positives" and "negatives" lists, added to the flags.
    #[arg(long)]
    examples: Option<PathBuf>,
    #[arg(long, default_value = "partial")]
    mode: MatchMode,
    #[arg(long, default_value = "strict-first")]
    rank: Rank,
    #[arg(long, default_value_t = api::DEFAULT_LIMIT)]
    limit: usize,
    /// Sample across strictness deciles.
    #[arg(long)]
    spread: bool,
    /// Restrict to entries from this source; repeatable.
    #[arg(long = "source")]
    sources: Vec<Source>,
    #[arg(long)]
    prefilter: bool,
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(short = 'p', long = "positive")]
    positives: Vec<String>,
    #[arg(short = 'n', long = "negative")]
    negatives: Vec<String>,
    #[arg(long, default_value = "partial")]
    mode: MatchMode,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Draw the evaluation and ablation samples.
    Sample(SampleArgs),
    /// Run a strategy over tasks and write per-task records.
    Run(RunArgs),
    /// Aggregate records into a report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 0.90)]
    ablation_confidence: f64,
    #[arg(long, default_value_t = 0.10)]
    ablation_margin: f64,
    /// Draw only the evaluation sample.
    #[arg(long)]
    no_ablation: bool,
    #[arg(long)]
    seed: u64,
    /// Output directory for evaluation.jsonl, ablation.jsonl and plan.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum StrategyKind {
    Reuse,
    External,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long, value_enum, default_value = "reuse")]
    strategy: StrategyKind,
    /// Store directory for the reuse strategy.
    #[arg(long, env = "REGEX_FORGE_DB")]
    db: Option<PathBuf>,
    /// Restrict reuse to one source.
    #[arg(long)]
    source: Option<Source>,
    /// Adapter program for the external strategy.
    #[arg(long)]
    program: Option<String>,
    /// Adapter argument; repeatable.
    #[arg(long = "arg", allow_hyphen_values = true)]
    args: Vec<String>,
    /// Name recorded for the strategy.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    #[arg(long, default_value = "partial")]
    mode: MatchMode,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Output JSONL of task records.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Record files written by `bench run`.
    #[arg(long = "records", required = true)]
    records: Vec<PathBuf>,
    /// Write the CSV table here; it goes to stdout when neither output is given.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    db: DbArg,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, default_value_t = 60)]
    query_timeout_secs: u64,
}

#[derive(Debug)]
enum CliError {
    /// Bad input from the caller: exit 1.
    User(String),
    /// Anything else: exit 2.
    Internal(String),
}

type CliResult = Result<(), CliError>;

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError::User(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(_) | BenchError::Csv(_) => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>, CliError> {
    if path == Path::new("-") {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    File::open(path)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn BufRead>)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn open_store(dir: &Path) -> Result<Store, CliError> {
    if !dir.join(forge_store::store::MANIFEST_FILE).is_file() {
        return Err(CliError::User(format!("{} is not a store", dir.display())));
    }
    Store::open(dir).map_err(|e| internal(format!("{}: {e}", dir.display())))
}

fn print_json(v: &impl serde::Serialize) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(internal)?;
    writeln!(out).map_err(internal)
}

fn ingest(a: IngestArgs) -> CliResult {
    if a.shards == 0 {
        return Err(CliError::User("--shards must be at least 1".into()));
    }
    let mut builder = if a.append && a.db.db.join(forge_store::store::MANIFEST_FILE).is_file() {
        StoreBuilder::from_store(&open_store(&a.db.db)?)
    } else {
        StoreBuilder::new()
    };
    let mut reports = Vec::new();
    for input in &a.inputs {
        let r = builder.ingest_reader(open_input(input)?, a.source).map_err(|e| match e {
            StoreError::Io(e) => CliError::User(format!("{}: {e}", input.display())),
            other => internal(other),
        })?;
        reports.push(r);
    }
    let stats = builder.write(&a.db.db, a.shards).map_err(internal)?;
    if a.json {
        return print_json(&serde_json::json!({ "inputs": reports, "stats": stats }));
    }
    for (input, r) in a.inputs.iter().zip(&reports) {
        println!(
            "{}: {} lines, {} new, {} new provenance, {} duplicate, {} skipped",
            input.display(),
            r.lines,
            r.new_entries,
            r.new_provenance,
            r.duplicates,
            r.skipped
        );
        for (line, why) in &r.skipped_examples {
            eprintln!("  line {line}: {why}");
        }
    }
    println!(
        "store {}: {} entries ({} regular, {} extended, {} unsupported, {} parse errors)",
        a.db.db.display(),
        stats.entries,
        stats.regular,
        stats.extended,
        stats.unsupported,
        stats.parse_errors
    );
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleFile {
    #[serde(default)]
    positives: Vec<String>,
    #[serde(default)]
    negatives: Vec<String>,
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

fn query(a: QueryArgs) -> CliResult {
    let mut positives = a.positives;
    let mut negatives = a.negatives;
    if let Some(path) = &a.examples {
        let file: ExampleFile = serde_json::from_reader(open_input(path)?)
            .map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
        positives.extend(file.positives);
        negatives.extend(file.negatives);
    }
    let req = ApiQueryRequest {
        positives,
        negatives,
        mode: a.mode,
        rank: a.rank,
        limit: a.limit,
        spread: a.spread,
        sources: (!a.sources.is_empty()).then_some(a.sources),
        prefilter: a.prefilter,
    };
    api::to_query(&req)?;
    let store = open_store(&a.db.db)?;
    let opts = QueryOptions {
        deadline: Some(Instant::now() + Duration::from_secs(a.timeout_secs)),
        ..QueryOptions::default()
    };
    let out = api::execute_query(&store, &req, &opts, &|_| {})?;
    if a.json {
        return print_json(&out);
    }
    let mut w = io::stdout().lock();
    let io = |e: io::Error| internal(e);
    writeln!(
        w,
        "{:>4}  {:>10}  {:>4}  {:>4}  {:>6}  {:<11}  pattern",
        "rank", "strictness", "len", "feat", "nfa", "source"
    )
    .map_err(io)?;
    for c in &out.candidates {
        writeln!(
            w,
            "{:>4}  {:>10}  {:>4}  {:>4}  {:>6}  {:<11}  {}",
            c.rank_position + 1,
            fmt_opt(c.strictness.map(|s| format!("{s:.4}"))),
            c.pattern_length,
            c.feature_count,
            fmt_opt(c.nfa_size),
            c.source.as_str(),
            c.pattern
        )
        .map_err(io)?;
    }
    let s = &out.stats;
    eprintln!(
        "{} returned of {} matching; {} scanned, {} timed out, {} ms{}",
        s.returned,
        s.matched,
        s.scanned,
        s.timeouts,
        s.elapsed_ms,
        if s.truncated { "; truncated at the time limit" } else { "" }
    );
    Ok(())
}

fn metrics(a: MetricsArgs) -> CliResult {
    let req = MetricsRequest { a: a.a, b: a.b, positives: a.positives, negatives: a.negatives, mode: a.mode };
    let r = api::compare(&req, &MeasureSettings::default())?;
    if a.json {
        return print_json(&r);
    }
    println!("ted={}", r.ted);
    println!("semantic_similarity={}", fmt_opt(r.semantic_similarity.map(|v| format!("{v:.1}"))));
    for (name, m) in [("a", &r.a), ("b", &r.b)] {
        println!(
            "{name}: pattern={} length={} features={} nfa_size={} accuracy={} strictness={}",
            m.pattern,
            m.pattern_length,
            m.feature_count,
            fmt_opt(m.nfa_size),
            fmt_opt(m.accuracy),
            fmt_opt(m.strictness.map(|s| format!("{s:.4}")))
        );
    }
    Ok(())
}

fn read_tasks(path: &Path) -> Result<Vec<CompositionTask>, CliError> {
    let report = load_tasks(open_input(path)?)?;
    for (reason, n) in report.exclusion_counts() {
        eprintln!("excluded {n} task(s): {reason:?}");
    }
    if report.malformed_lines > 0 {
        eprintln!("skipped {} malformed line(s)", report.malformed_lines);
    }
    Ok(report.tasks)
}

fn sample(a: SampleArgs) -> CliResult {
    let tasks = read_tasks(&a.tasks)?;
    let eval = SampleSpec { confidence: a.confidence, margin: a.margin };
    let abl = (!a.no_ablation)
        .then_some(SampleSpec { confidence: a.ablation_confidence, margin: a.ablation_margin });
    let plan = plan_samples(&tasks, eval, abl, a.seed)?;
    std::fs::create_dir_all(&a.out).map_err(internal)?;
    for (name, ids) in [("evaluation.jsonl", &plan.evaluation), ("ablation.jsonl", &plan.ablation)] {
        let wanted: BTreeSet<&String> = ids.iter().collect();
        let mut w = create_output(&a.out.join(name))?;
        write_tasks(&mut w, tasks.iter().filter(|t| wanted.contains(&t.id)))?;
        w.flush().map_err(internal)?;
    }
    let mut w = create_output(&a.out.join("plan.json"))?;
    serde_json::to_writer_pretty(&mut w, &plan).map_err(internal)?;
    w.flush().map_err(internal)?;
    println!(
        "{} tasks in {} strata: {} evaluation, {} ablation (seed {})",
        tasks.len(),
        plan.strata.len(),
        plan.evaluation.len(),
        plan.ablation.len(),
        a.seed
    );
    Ok(())
}

fn bench_run(a: RunArgs) -> CliResult {
    let tasks = read_tasks(&a.tasks)?;
    let mut config = RunConfig {
        settings: MeasureSettings { mode: a.mode, ..MeasureSettings::default() },
        max_candidates: a.max_candidates,
        ..RunConfig::default()
    };
    if let Some(w) = a.workers {
        config.workers = w;
    }
    let store;
    let strategy: Box<dyn Strategy + '_> = match a.strategy {
        StrategyKind::Reuse => {
            let db = a.db.as_ref().ok_or_else(|| CliError::User("the reuse strategy needs --db".into()))?;
            store = open_store(db)?;
            let mut s = match a.source {
                Some(src) => ReuseStrategy::only(&store, src),
                None => ReuseStrategy::new(&store),
            };
            if let Some(n) = &a.name {
                s.name = n.clone();
            }
            Box::new(s)
        }
        StrategyKind::External => {
            let program = a
                .program
                .clone()
                .ok_or_else(|| CliError::User("the external strategy needs --program".into()))?;
            Box::new(ExternalStrategy {
                name: a.name.clone().unwrap_or_else(|| program.clone()),
                program,
                args: a.args.clone(),
                timeout: Duration::from_millis(a.timeout_ms),
            })
        }
    };
    let records = run_strategy(strategy.as_ref(), &tasks, &config);
    let mut w = create_output(&a.out)?;
    for r in &records {
        serde_json::to_writer(&mut w, r).map_err(internal)?;
        w.write_all(b"\n").map_err(internal)?;
    }
    w.flush().map_err(internal)?;
    let ok = records.iter().filter(|r| r.success).count();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    println!("{}: {ok}/{} tasks succeeded, {errors} strategy errors", strategy.id(), records.len());
    Ok(())
}

fn report(a: ReportArgs) -> CliResult {
    let mut records: Vec<TaskRecord> = Vec::new();
    for path in &a.records {
        for (i, line) in open_input(path)?.lines().enumerate() {
            let line = line.map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(&line)
                .map_err(|e| CliError::User(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push(r);
        }
    }
    if records.is_empty() {
        return Err(CliError::User("no records to report".into()));
    }
    let report = aggregate(&records);
    if let Some(path) = &a.json {
        let mut w = create_output(path)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(internal)?;
        w.flush().map_err(internal)?;
    }
    match &a.csv {
        Some(path) => report.write_csv(create_output(path)?)?,
        None if a.json.is_none() => report.write_csv(io::stdout().lock())?,
        None => {}
    }
    Ok(())
}

fn serve(a: ServeArgs) -> CliResult {
    let store = open_store(&a.db.db)?;
    let state =
        AppState { query_cap: Duration::from_secs(a.query_timeout_secs), ..AppState::new(Arc::new(store)) };
    let rt = tokio::runtime::Runtime::new().map_err(internal)?;
    rt.block_on(http::serve(state, &a.bind)).map_err(|e| CliError::User(format!("{}: {e}", a.bind)))
}

/// Parses arguments and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Query(a) => query(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(BenchCommand::Sample(a)) => sample(a),
        Command::Bench(BenchCommand::Run(a)) => bench_run(a),
        Command::Bench(BenchCommand::Report(a)) => report(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::User(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["regex-forge", "query", "--bogus"]), 1);
        assert_eq!(run(["regex-forge"]), 1);
        assert_eq!(run(["regex-forge", "--help"]), 0);
    }
}
