//! `reccheck` command line: run a test suite against a model, compare two
//! reports, or generate synthetic datasets.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reccheck::dataset::{
    load_catalog, load_interactions, sessionize, temporal_split, Dataset, FileFormat, SplitRule,
};
use reccheck::harness::{
    compare_reports, parse_report, run_reclist_with, serialize_report, train_item_space,
    CompareRow, Comparison, RecListSpec, RecReport, RecTask, RecTest, RunSpaces, TestOutput,
};
use reccheck::models::{
    CooccurrenceModel, P2vModel, PopularityModel, RecModel, RemoteConfig, RemoteModel,
};
use reccheck::syngen::{generate, write_files, Preset, SynSpec};
use reccheck::RecError;

#[derive(Parser)]
#[command(
    name = "reccheck",
    version,
    about = "Behavioral testing harness for black-box recommender systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a model on a dataset and write a report.
    Run(RunArgs),
    /// Compare two reports produced on the same dataset.
    Compare(CompareArgs),
    /// Generate a synthetic dataset with planted structure.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for FileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => FileFormat::Jsonl,
            FormatArg::Csv => FileFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Similar,
    Complementary,
    Session,
}

impl From<TaskArg> for RecTask {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Similar => RecTask::SimilarItems,
            TaskArg::Complementary => RecTask::ComplementaryItems,
            TaskArg::Session => RecTask::SessionBased,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Popularity,
    Cooccurrence,
    P2v,
    Remote,
}

#[derive(Args)]
struct RunArgs {
    /// Interaction log (jsonl or csv).
    #[arg(long)]
    interactions: PathBuf,
    /// Item catalog (jsonl or csv).
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: FormatArg,
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Remote model endpoint (required with --model remote).
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// Comma-separated test names, or "all".
    #[arg(long, default_value = "all")]
    tests: String,
    /// Report output path.
    #[arg(long)]
    out: PathBuf,
    /// Split sessions on inactivity gaps of more than this many ms.
    #[arg(long)]
    gap_ms: Option<i64>,
    /// Latest fraction of sessions reserved for testing (default 0.2).
    #[arg(long, conflicts_with = "split_ts")]
    split_fraction: Option<f64>,
    /// Sessions starting at or after this timestamp go to the test split.
    #[arg(long)]
    split_ts: Option<i64>,
    /// Remote model request timeout.
    #[arg(long, default_value_t = 5_000)]
    timeout_ms: u64,
    /// Remote model retries after the first failed attempt.
    #[arg(long, default_value_t = 2)]
    max_retries: u32,
    /// Optional bearer token for the remote model.
    #[arg(long)]
    bearer_token: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    report_a: PathBuf,
    report_b: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: CompareFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareFormat {
    Table,
    Json,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    n_clusters: usize,
    #[arg(long, default_value_t = 20)]
    items_per_cluster: usize,
    #[arg(long, default_value_t = 2000)]
    n_sessions: usize,
    #[arg(long, default_value_t = 3)]
    session_len_min: usize,
    #[arg(long, default_value_t = 8)]
    session_len_max: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 1.1)]
    zipf_exponent: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Clustered,
    Zipf,
}

fn exit_code_for(err: &RecError) -> u8 {
    match err {
        RecError::Config(_) => 1,
        RecError::Remote(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RECCHECK_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems are exit code 1 regardless of clap's default.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn parse_tests(arg: &str) -> Result<Vec<RecTest>, RecError> {
    if arg.trim() == "all" {
        return Ok(RecTest::all_defaults());
    }
    let mut tests = Vec::new();
    for name in arg.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let test = RecTest::by_name(name).ok_or_else(|| {
            let known: Vec<String> =
                RecTest::all_defaults().into_iter().map(|t| t.name).collect();
            RecError::Config(format!(
                "unknown test {name:?}; known tests: {}",
                known.join(", ")
            ))
        })?;
        tests.push(test);
    }
    if tests.is_empty() {
        return Err(RecError::Config("no tests requested".into()));
    }
    Ok(tests)
}

fn cmd_run(args: RunArgs) -> Result<(), RecError> {
    let format: FileFormat = args.format.into();
    let interactions = load_interactions(&args.interactions, format)?;
    let sessions = sessionize(&interactions, args.gap_ms);
    let rule = match (args.split_fraction, args.split_ts) {
        (None, None) => SplitRule::Fraction(0.2),
        (Some(f), None) => SplitRule::Fraction(f),
        (None, Some(ts)) => SplitRule::AtTimestamp(ts),
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting split flags"),
    };
    let (train, test) = temporal_split(&sessions, rule)?;
    let catalog = load_catalog(&args.catalog, format)?;
    let dataset = Dataset::new(train, test, catalog)?;
    log::info!(
        "dataset: {} train / {} test sessions, {} catalog items",
        dataset.train.len(),
        dataset.test.len(),
        dataset.catalog.len()
    );

    let spec = RecListSpec {
        task: args.task.into(),
        tests: parse_tests(&args.tests)?,
        k: args.k,
        seed: args.seed,
    };

    let mut spaces = RunSpaces::trained_in_run();
    let model: Box<dyn RecModel> = match args.model {
        ModelArg::Popularity => Box::new(PopularityModel::from_train(&dataset.train)),
        ModelArg::Cooccurrence => Box::new(CooccurrenceModel::from_train(&dataset.train)),
        ModelArg::P2v => {
            // Share one space between the model and the distance tests.
            let space = Arc::new(train_item_space(&dataset, spec.seed)?);
            spaces = RunSpaces::with_item(Arc::clone(&space), true);
            Box::new(P2vModel::new(space))
        }
        ModelArg::Remote => {
            let endpoint = args.endpoint.clone().ok_or_else(|| {
                RecError::Config("--model remote requires --endpoint".into())
            })?;
            let mut config = RemoteConfig::new(endpoint);
            config.timeout_ms = args.timeout_ms;
            config.max_retries = args.max_retries;
            config.bearer_token = args.bearer_token.clone();
            Box::new(RemoteModel::new(config))
        }
    };

    let report = run_reclist_with(&dataset, model.as_ref(), &spec, spaces)?;
    let bytes = serialize_report(&report)?;
    std::fs::write(&args.out, &bytes).map_err(|e| RecError::Io {
        path: args.out.clone(),
        source: e,
    })?;
    print_report_summary(&report);
    println!("report written to {}", args.out.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => "null".into(),
    }
}

fn print_report_summary(report: &RecReport) {
    println!(
        "run {} | model {} | {} tests | deterministic: {}",
        report.run_id,
        report.model_name,
        report.results.len(),
        report.deterministic
    );
    for result in &report.results {
        match &result.output {
            TestOutput::Metric(m) => println!(
                "  {}@{}: {} (n={}, skipped={})",
                result.name,
                m.k,
                fmt_opt(m.value),
                m.n_cases,
                m.n_skipped
            ),
            TestOutput::Distance(d) => println!(
                "  {}: query->label {} | query->pred {} (n={}, skipped={})",
                result.name,
                fmt_opt(d.mean_query_to_label),
                fmt_opt(d.mean_query_to_pred),
                d.n_cases,
                d.n_skipped
            ),
            TestOutput::PathLength(p) => println!(
                "  {}: mean {} (n={}, skipped={})",
                result.name,
                fmt_opt(p.mean),
                p.n_cases,
                p.n_skipped
            ),
            TestOutput::Strata(s) => {
                println!("  {} ({} buckets):", result.name, s.buckets.len());
                for b in &s.buckets {
                    println!(
                        "    counts {:>6}..={:<6} hr={} (n={})",
                        b.low_count,
                        b.high_count,
                        fmt_opt(b.hr_at_k),
                        b.n_cases
                    );
                }
            }
            TestOutput::Slices(s) => {
                println!(
                    "  {} ({} slices, {} unsliceable):",
                    result.name,
                    s.slices.len(),
                    s.unsliceable
                );
                for (key, stats) in &s.slices {
                    println!(
                        "    {key}: hr={:.4} mrr={:.4} (n={})",
                        stats.hr_at_k, stats.mrr_at_k, stats.n_cases
                    );
                }
            }
            TestOutput::Asymmetry(a) => println!(
                "  {}: reciprocity {} over {} pairs",
                result.name,
                fmt_opt(a.score),
                a.n_pairs
            ),
            TestOutput::PriceAsymmetry(p) => println!(
                "  {}: frac_cheaper {} | price ratio {} (n={}, skipped={})",
                result.name,
                fmt_opt(p.frac_cheaper),
                fmt_opt(p.mean_price_ratio),
                p.n_cases,
                p.n_skipped
            ),
            TestOutput::Failure { error } => {
                println!("  {}: FAILED ({error})", result.name)
            }
        }
    }
}

fn cmd_compare(args: CompareArgs) -> Result<(), RecError> {
    let read = |path: &PathBuf| -> Result<RecReport, RecError> {
        let bytes = std::fs::read(path).map_err(|e| RecError::Io {
            path: path.clone(),
            source: e,
        })?;
        parse_report(&bytes)
    };
    let a = read(&args.report_a)?;
    let b = read(&args.report_b)?;
    let comparison = compare_reports(&a, &b)?;
    match args.format {
        CompareFormat::Json => {
            let value = serde_json::to_value(&comparison)
                .map_err(|e| RecError::Report(format!("serialize comparison: {e}")))?;
            println!("{value}");
        }
        CompareFormat::Table => print_comparison(&comparison),
    }
    Ok(())
}

fn fmt_rel(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:+.1}%", x * 100.0),
        None => "-".into(),
    }
}

fn print_comparison(comparison: &Comparison) {
    println!(
        "{:<40} {:>12} {:>12} {:>12} {:>9}",
        "test", comparison.model_a, comparison.model_b, "delta", "rel"
    );
    for row in &comparison.rows {
        match row {
            CompareRow::Scalar {
                label,
                a,
                b,
                abs_delta,
                rel_delta,
            } => println!(
                "{label:<40} {:>12} {:>12} {:>12} {:>9}",
                fmt_opt(*a),
                fmt_opt(*b),
                fmt_opt(*abs_delta),
                fmt_rel(*rel_delta)
            ),
            CompareRow::Buckets { label, entries } => {
                println!("{label}:");
                for e in entries {
                    println!(
                        "  {:<38} {:>12} {:>12} {:>12} {:>9}",
                        e.key,
                        fmt_opt(e.a),
                        fmt_opt(e.b),
                        fmt_opt(e.abs_delta),
                        match e.ratio {
                            Some(r) => format!("x{r:.2}"),
                            None => "-".into(),
                        }
                    );
                }
            }
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), RecError> {
    let spec = SynSpec {
        preset: match args.preset {
            PresetArg::Clustered => Preset::Clustered,
            PresetArg::Zipf => Preset::Zipf,
        },
        n_clusters: args.n_clusters,
        items_per_cluster: args.items_per_cluster,
        n_sessions: args.n_sessions,
        session_len: (args.session_len_min, args.session_len_max),
        cross_cluster_noise: args.noise,
        zipf_exponent: args.zipf_exponent,
        seed: args.seed,
    };
    let data = generate(&spec)?;
    let paths = write_files(&data, &args.out_dir)?;
    println!(
        "generated {} interactions over {} items",
        data.interactions.len(),
        data.catalog.len()
    );
    println!("  interactions: {}", paths.interactions.display());
    println!("  catalog:      {}", paths.catalog.display());
    println!("  manifest:     {}", paths.manifest.display());
    Ok(())
}
