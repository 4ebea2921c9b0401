use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbot::bench::{self, BenchConfig};
use dbot::collab::CollabConfig;
use dbot::doc_learning::{self, DocLearningConfig};
use dbot::io;
use dbot::pipeline::{self, RunConfig};
use dbot::search::{OutcomeStatus, SearchConfig};
use dbot::toolkit::{self, LabeledPair, ToolRegistry, DEFAULT_P_MIN};
use dbot::Result;
use dbot_core::metrics::{KsThresholds, DEFAULT_KS_THRESHOLD};

/// Database anomaly diagnosis with LLM experts.
///
/// Without --rules the model is reached over HTTP, configured by
/// DBOT_LLM_ENDPOINT, DBOT_LLM_KEY, DBOT_LLM_MODEL and DBOT_LLM_EMBED_MODEL.
#[derive(Parser)]
#[command(name = "dbot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a directory of documents into knowledge chunks and clusters.
    Doc2knowledge(Doc2KnowledgeArgs),
    /// Diagnose one anomaly and write the report.
    Diagnose(DiagnoseArgs),
    /// Run a benchmark case file and tabulate accuracy.
    Bench(BenchArgs),
    /// List the category / tool / api hierarchy of a manifest.
    Tools {
        manifest: PathBuf,
    },
    /// Fit the tool relevance scorer on labelled (context, api) pairs.
    TrainMatcher(TrainArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Scripted model rules (JSON); no network access is made.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Doc2KnowledgeArgs {
    /// Directory of .md / .markdown / .txt files.
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4096)]
    max_block_size: usize,
    #[arg(long, default_value_t = 3)]
    k_sim: usize,
    #[arg(long, default_value_t = 0.4)]
    eps: f64,
    #[arg(long, default_value_t = 3)]
    min_pts: usize,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 20)]
    max_turns: usize,
    #[arg(long, default_value_t = 1.4)]
    exploration: f64,
    #[arg(long, default_value_t = 1)]
    review_rounds: usize,
    #[arg(long, default_value_t = DEFAULT_KS_THRESHOLD)]
    ks_threshold: f64,
}

impl SearchArgs {
    fn collab(&self) -> CollabConfig {
        CollabConfig {
            search: SearchConfig {
                max_turns: self.max_turns,
                c: self.exploration,
                ..SearchConfig::default()
            },
            review_rounds: self.review_rounds,
            ..CollabConfig::default()
        }
    }
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    knowledge: PathBuf,
    #[arg(long)]
    tools: PathBuf,
    /// Metric series, one JSON object per line.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Alert JSON with start_time, end_time and alerts.
    #[arg(long)]
    alert: Option<PathBuf>,
    #[arg(long)]
    start: Option<i64>,
    #[arg(long)]
    end: Option<i64>,
    /// Expert profiles or chunk clusters; one general expert when absent.
    #[arg(long)]
    experts: Option<PathBuf>,
    /// Scripted tool results; without it every tool call fails.
    #[arg(long)]
    executor: Option<PathBuf>,
    /// Trained relevance scorer used to filter matched tools.
    #[arg(long)]
    matcher: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_P_MIN)]
    p_min: f64,
    #[arg(long)]
    description: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    tools: PathBuf,
    /// JSON list of {context, tool_api, label}.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[command(flatten)]
    model: ModelArgs,
}

fn doc2knowledge(a: Doc2KnowledgeArgs) -> Result<ExitCode> {
    let gateway = pipeline::build_gateway(a.model.rules.as_deref(), a.model.seed)?;
    let docs = doc_learning::read_documents(&a.docs)?;
    let config = DocLearningConfig {
        max_block_size: a.max_block_size,
        k_sim: a.k_sim,
        eps: a.eps,
        min_pts: a.min_pts,
    };
    let out = doc_learning::learn_documents(&gateway, &docs, &config)?;
    io::write_json(&a.out.join("knowledge.json"), &out.chunks)?;
    io::write_json(&a.out.join("clusters.json"), &out.clusters)?;
    io::write_json(&a.out.join("manual_queue.json"), &out.manual_queue)?;
    println!(
        "{} documents, {} chunks, {} clusters, {} queued for review, {} blocks skipped",
        docs.len(),
        out.chunks.len(),
        out.clusters.iter().filter(|c| c.cluster_id >= 0).count(),
        out.manual_queue.len(),
        out.skipped_blocks
    );
    Ok(ExitCode::SUCCESS)
}

fn diagnose(a: DiagnoseArgs) -> Result<ExitCode> {
    let config = RunConfig {
        metrics: a.metrics,
        rules: a.model.rules,
        executor: a.executor,
        alert: a.alert,
        start: a.start,
        end: a.end,
        experts: a.experts,
        matcher: a.matcher,
        p_min: a.p_min,
        description: a.description,
        seed: a.model.seed,
        collab: a.search.collab(),
        ks: KsThresholds::uniform(a.search.ks_threshold),
        ..RunConfig::new(a.knowledge, a.tools)
    };
    let result = pipeline::diagnose(&config)?;
    pipeline::write_outputs(&a.out, &result)?;
    match result.status {
        OutcomeStatus::Concluded => println!("root causes: {}", result.report.root_causes.join("; ")),
        OutcomeStatus::Inconclusive => println!("inconclusive: no root cause found"),
    }
    println!("report written to {}", a.out.join("report.md").display());
    Ok(ExitCode::SUCCESS)
}

fn run_bench(a: BenchArgs) -> Result<ExitCode> {
    let cases = bench::load_cases(&a.cases)?;
    let config = BenchConfig {
        seed: a.seed,
        collab: a.search.collab(),
        ks: KsThresholds::uniform(a.search.ks_threshold),
        ..BenchConfig::default()
    };
    let results = bench::run_benchmark(&cases, &config);
    bench::write_results(&a.out, &results)?;
    let mean = bench::mean_row(&results);
    println!(
        "{} cases, mean acc {}",
        results.len(),
        mean.acc.map(|m| format!("{m:.4}")).unwrap_or_else(|| "n/a".into())
    );
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} case(s) failed, see {}", a.out.join("results.md").display());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn tools(manifest: &Path) -> Result<ExitCode> {
    for line in ToolRegistry::load(manifest)?.hierarchy_lines() {
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn train(a: TrainArgs) -> Result<ExitCode> {
    let gateway = pipeline::build_gateway(a.model.rules.as_deref(), a.model.seed)?;
    let registry = ToolRegistry::load(&a.tools)?;
    let pairs: Vec<LabeledPair> = io::read_json(&a.pairs)?;
    let report = toolkit::train_matcher(&gateway, &registry, &pairs, a.epochs, a.lr)?;
    io::write_json(&a.out, &report.model)?;
    println!(
        "{} pairs, loss {:.6} -> {:.6}",
        pairs.len(),
        report.initial_loss(),
        report.final_loss()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Doc2knowledge(a) => doc2knowledge(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Bench(a) => run_bench(a),
        Command::Tools { manifest } => tools(&manifest),
        Command::TrainMatcher(a) => train(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
