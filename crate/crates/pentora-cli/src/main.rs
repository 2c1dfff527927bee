//! Operator entry points: single-job scans, suite runs, results analysis.
//!
//! Configuration precedence: command-line flags > environment variables >
//! configuration file > built-in defaults. Exit codes: 0 success/validated,
//! 1 usage or configuration error, 2 run finished without a validated
//! finding.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::RngCore;
use serde::Deserialize;

use pentora_core::accounting::UsageTracker;
use pentora_core::agents::prompts::PromptSet;
use pentora_core::agents::JobRunner;
use pentora_core::bench::{
    export, load_suite, run_suite, summarize, summary_json_bytes, RunResult, SuiteSummary,
};
use pentora_core::config::{EngineSelection, ProviderSelection, RunConfig};
use pentora_core::domain::{Job, JobMode, TargetDescriptor};
use pentora_core::reporting::InMemoryMailbox;
use pentora_core::sandbox::SandboxManager;
use pentora_core::store::RunStore;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_NOT_VALIDATED: i32 = 2;

#[derive(Parser)]
#[command(
    name = "pentora",
    version,
    about = "Autonomous web penetration-testing engine"
)]
#[command(after_help = "\
Configuration precedence: command-line flags > environment variables > \
--config file > defaults.

Environment: PENTORA_API_KEY (provider credential), PENTORA_PROVIDER_ENDPOINT, \
PENTORA_MODEL, PENTORA_ENGINE (fake|docker), PENTORA_ENGINE_BINARY, \
PENTORA_ENGINE_ENDPOINT, PENTORA_WEBHOOK_URL, PENTORA_LOG (log filter).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one assessment against a target URL.
    Scan(ScanArgs),
    /// Deploy and run a challenge suite, exporting metrics.
    Bench(BenchArgs),
    /// Recompute suite statistics from stored results without re-running.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Assessment mode: ctf or whitebox.
    #[arg(long)]
    mode: Option<String>,
    /// Provider backend: scripted or real.
    #[arg(long)]
    provider: Option<String>,
    /// Fixture file for the scripted provider (a directory of
    /// <challenge-id>.json files for bench).
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Output directory for run artifacts and exports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent challenges in bench mode.
    #[arg(long)]
    parallel: Option<usize>,
    /// Tool-call budget per job.
    #[arg(long)]
    max_tools: Option<u64>,
    /// Dollar budget per job.
    #[arg(long)]
    max_cost: Option<f64>,
    /// Soft wall-clock budget per job, seconds.
    #[arg(long)]
    max_seconds: Option<u64>,
    /// Replace target identity with an obfuscated alias in reports.
    #[arg(long)]
    anonymize: bool,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// HTTP(S) endpoint to assess.
    target_url: String,
    /// Free-text description given to the agent.
    #[arg(default_value = "No description provided.")]
    description: String,
    /// Local source checkout (whitebox mode).
    #[arg(long)]
    source: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of challenge directories (one challenge.json each).
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Path to a results.jsonl produced by bench.
    results: PathBuf,
}

// ---------------------------------------------------------------------------
// Configuration resolution
// ---------------------------------------------------------------------------

/// File-level configuration; every field optional so flags and environment
/// can fill the rest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    provider: Option<String>,
    fixture: Option<PathBuf>,
    provider_endpoint: Option<String>,
    api_key_env: Option<String>,
    model: Option<String>,
    engine: Option<String>,
    engine_binary: Option<String>,
    engine_endpoint: Option<String>,
    image: Option<String>,
    network: Option<String>,
    parallel: Option<usize>,
    out: Option<PathBuf>,
    anonymize: Option<bool>,
    max_tools: Option<u64>,
    max_cost: Option<f64>,
    max_seconds: Option<u64>,
    hard_cap_seconds: Option<u64>,
    max_attempts: Option<u32>,
    input_rate: Option<f64>,
    output_rate: Option<f64>,
    cached_rate: Option<f64>,
    webhook_url: Option<String>,
    prompt_dir: Option<PathBuf>,
    secrets: Option<BTreeMap<String, String>>,
}

fn parse_mode(value: &str) -> Result<JobMode, String> {
    match value {
        "ctf" => Ok(JobMode::Ctf),
        "whitebox" => Ok(JobMode::Whitebox),
        other => Err(format!("unknown mode {other:?} (expected ctf or whitebox)")),
    }
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();

    // Configuration file first.
    let mut file = FileConfig::default();
    if let Some(path) = &common.config {
        let raw =
            std::fs::read_to_string(path).map_err(|e| format!("read {}: {e}", path.display()))?;
        file = toml::from_str(&raw).map_err(|e| format!("parse {}: {e}", path.display()))?;
    }
    if let Some(mode) = &file.mode {
        config.mode = parse_mode(mode)?;
    }
    if let Some(model) = file.model {
        config.model = model;
    }
    if let Some(image) = file.image {
        config.image = image;
    }
    if let Some(network) = file.network {
        config.network = Some(network);
    }
    if let Some(parallel) = file.parallel {
        config.parallelism = parallel;
    }
    if let Some(out) = file.out {
        config.out_dir = out;
    }
    if let Some(anonymize) = file.anonymize {
        config.anonymize = anonymize;
    }
    if let Some(v) = file.max_tools {
        config.stop_policy.max_tool_calls = v;
    }
    if let Some(v) = file.max_cost {
        config.stop_policy.max_cost = v;
    }
    if let Some(v) = file.max_seconds {
        config.stop_policy.max_wall_secs = v;
    }
    if let Some(v) = file.hard_cap_seconds {
        config.stop_policy.hard_time_cap_secs = v;
    }
    if let Some(v) = file.max_attempts {
        config.max_attempts = v;
    }
    if let Some(v) = file.input_rate {
        config.cost_model.input_rate = v;
    }
    if let Some(v) = file.output_rate {
        config.cost_model.output_rate = v;
    }
    if let Some(v) = file.cached_rate {
        config.cost_model.cached_rate = v;
    }
    if let Some(v) = file.webhook_url {
        config.webhook_url = Some(v);
    }
    if let Some(v) = file.prompt_dir {
        config.prompt_dir = Some(v);
    }
    if let Some(v) = file.secrets {
        config.secrets = v;
    }

    // Environment overrides the file.
    let engine_name = std::env::var("PENTORA_ENGINE").ok().or(file.engine);
    let engine_binary = std::env::var("PENTORA_ENGINE_BINARY")
        .ok()
        .or(file.engine_binary)
        .unwrap_or_else(|| "docker".into());
    let engine_endpoint = std::env::var("PENTORA_ENGINE_ENDPOINT")
        .ok()
        .or(file.engine_endpoint);
    config.engine = match engine_name.as_deref() {
        None | Some("fake") => EngineSelection::Fake,
        Some("docker") => EngineSelection::Docker {
            binary: engine_binary,
            endpoint: engine_endpoint,
        },
        Some(other) => {
            return Err(format!(
                "unknown engine {other:?} (expected fake or docker)"
            ))
        }
    };
    if let Ok(url) = std::env::var("PENTORA_WEBHOOK_URL") {
        config.webhook_url = Some(url);
    }
    if let Ok(model) = std::env::var("PENTORA_MODEL") {
        config.model = model;
    }

    // Flags override everything.
    if let Some(mode) = &common.mode {
        config.mode = parse_mode(mode)?;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(parallel) = common.parallel {
        config.parallelism = parallel;
    }
    if let Some(v) = common.max_tools {
        config.stop_policy.max_tool_calls = v;
    }
    if let Some(v) = common.max_cost {
        config.stop_policy.max_cost = v;
    }
    if let Some(v) = common.max_seconds {
        config.stop_policy.max_wall_secs = v;
    }
    if common.anonymize {
        config.anonymize = true;
    }

    let provider_name = common
        .provider
        .clone()
        .or(file.provider)
        .unwrap_or_else(|| "real".into());
    let fixture = common.fixture.clone().or(file.fixture);
    config.provider = match provider_name.as_str() {
        "scripted" => {
            let fixture = fixture.ok_or("scripted provider requires --fixture")?;
            ProviderSelection::Scripted { fixture }
        }
        "real" | "http" => ProviderSelection::Http {
            endpoint: std::env::var("PENTORA_PROVIDER_ENDPOINT")
                .ok()
                .or(file.provider_endpoint)
                .unwrap_or_else(|| "http://127.0.0.1:8080/v1/chat/completions".into()),
            api_key_env: file.api_key_env.unwrap_or_else(|| "PENTORA_API_KEY".into()),
        },
        other => {
            return Err(format!(
                "unknown provider {other:?} (expected scripted or real)"
            ))
        }
    };

    config.validate()?;
    Ok(config)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

fn cmd_scan(args: &ScanArgs) -> i32 {
    let mut config = match resolve_config(&args.common) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("configuration error: {err}");
            return EXIT_USAGE;
        }
    };
    if args.source.is_some() && config.mode == JobMode::Ctf {
        eprintln!("configuration error: --source requires --mode whitebox");
        return EXIT_USAGE;
    }
    // Scans usually reach targets outside a managed network.
    if config.network.is_none() {
        config.network_internal = false;
    }

    // Engine and provider problems surface before any container exists.
    let runtime = match config.build_runtime() {
        Ok(runtime) => runtime,
        Err(err) => {
            eprintln!("engine error: {err}");
            return EXIT_USAGE;
        }
    };
    let substitutions = [("target_url", args.target_url.as_str())];
    let (provider, clock) = match config.build_provider(None, &substitutions) {
        Ok(pair) => pair,
        Err(err) => {
            eprintln!("provider error: {err}");
            return EXIT_USAGE;
        }
    };

    let job_id = format!("scan-{:08x}", rand::rng().next_u32());
    let job = match Job::new(
        &job_id,
        config.mode,
        TargetDescriptor {
            url: args.target_url.clone(),
            description: args.description.clone(),
            source_path: args.source.clone(),
            withheld_metadata: Vec::new(),
        },
        config.stop_policy,
    ) {
        Ok(job) => job,
        Err(err) => {
            eprintln!("configuration error: {err}");
            return EXIT_USAGE;
        }
    };

    let runner = JobRunner {
        sandbox: Arc::new(SandboxManager::new(
            runtime,
            config.sandbox.clone(),
            clock.clone(),
        )),
        provider,
        mailbox: Arc::new(InMemoryMailbox::new()),
        clock: clock.clone(),
        store: RunStore::new(&config.out_dir),
        prompts: PromptSet::load(config.prompt_dir.as_deref()),
        config: config.clone(),
    };
    let tracker = UsageTracker::new(clock);
    let report = runner.run_job(job, &tracker);

    println!("job: {}", report.job.id);
    println!("state: {:?}", report.job.state);
    println!("stop_reason: {}", report.stop_reason.label());
    println!("findings: {}", report.findings.len());
    println!(
        "usage: {} tool calls, {} tokens, {:.1} s",
        report.usage.total_tool_calls(),
        report.usage.total_tokens(),
        report.wall_seconds
    );
    println!("cost: ${:.4}", report.cost_dollars);
    if let Some(dir) = &report.run_dir {
        println!("report: {}", dir.join("report.md").display());
    }
    if let Some(err) = &report.error {
        eprintln!("error: {err}");
    }
    if report.success {
        EXIT_OK
    } else {
        EXIT_NOT_VALIDATED
    }
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

fn percent(rate: f64) -> String {
    format!("{:.1}%", rate * 100.0)
}

fn print_summary_block(summary: &SuiteSummary) {
    let row = |left: &str, lv: String, right: &str, rv: String| {
        println!("{left:<28}{lv:<14}{right:<30}{rv}");
    };
    println!("==== suite summary ====");
    row(
        "Total Challenges",
        summary.n.to_string(),
        "Success Rate",
        percent(summary.success_rate),
    );
    row(
        "Successful Challenges",
        summary.successes.to_string(),
        "Failed Challenges",
        summary.failures.to_string(),
    );
    if summary.infrastructure_failures > 0 {
        row(
            "Infrastructure Failures",
            summary.infrastructure_failures.to_string(),
            "(excluded from statistics)",
            String::new(),
        );
    }
    row(
        "Avg. Solve Time",
        format!("{:.1}s", summary.wall.mean),
        "Median Solve Time",
        format!("{:.1}s", summary.wall.median),
    );
    row(
        "Min Solve Time",
        format!("{:.1}s", summary.wall.min),
        "Max Solve Time",
        format!("{:.1}s", summary.wall.max),
    );
    row(
        "Median Time (solved)",
        summary
            .median_wall_solved
            .map_or("-".into(), |v| format!("{v:.1}s")),
        "Median Time (unsolved)",
        summary
            .median_wall_unsolved
            .map_or("-".into(), |v| format!("{v:.1}s")),
    );
    row(
        "Total Regular Input Tokens",
        summary.total_regular_input_tokens.to_string(),
        "Total Output Tokens",
        summary.total_output_tokens.to_string(),
    );
    row(
        "Total Cached Tokens",
        summary.total_cached_tokens.to_string(),
        "Total Reasoning Tokens",
        summary.total_reasoning_tokens.to_string(),
    );
    row(
        "Total Token Cost",
        format!("${:.4}", summary.total_cost),
        "Avg. Cost per Challenge",
        format!("${:.4}", summary.mean_cost),
    );
    row(
        "Median Cost (solved)",
        summary
            .median_cost_solved
            .map_or("-".into(), |v| format!("${v:.4}")),
        "Median Cost (unsolved)",
        summary
            .median_cost_unsolved
            .map_or("-".into(), |v| format!("${v:.4}")),
    );
    row(
        "Total Commands",
        summary.total_commands.to_string(),
        "Avg. Commands per Challenge",
        format!("{:.1}", summary.mean_commands),
    );
    row(
        "Total Tool Calls",
        summary.total_tool_calls.to_string(),
        "Avg. Tool Calls per Challenge",
        format!("{:.1}", summary.mean_tool_calls),
    );

    println!("\ncorrelations with success (point-biserial):");
    for (name, corr) in [
        ("tool calls", &summary.correlations.tool_calls),
        ("cost", &summary.correlations.cost),
        ("total tokens", &summary.correlations.total_tokens),
        ("wall time", &summary.correlations.wall_time),
    ] {
        match corr {
            Some(corr) => println!("  {name:<14} r={:+.3}  p={:.4}", corr.r, corr.p),
            None => println!("  {name:<14} absent (degenerate input)"),
        }
    }

    println!("\nper category:");
    for row in &summary.per_category {
        println!(
            "  {:<26} {:>3}/{:<3} {}",
            row.category,
            row.successes,
            row.n,
            percent(row.rate)
        );
    }
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let config = match resolve_config(&args.common) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("configuration error: {err}");
            return EXIT_USAGE;
        }
    };
    let specs = match load_suite(&args.suite) {
        Ok(specs) if specs.is_empty() => {
            eprintln!("no challenges found under {}", args.suite.display());
            return EXIT_USAGE;
        }
        Ok(specs) => specs,
        Err(err) => {
            eprintln!("suite error: {err}");
            return EXIT_USAGE;
        }
    };

    println!(
        "running {} challenge(s) with parallelism {}",
        specs.len(),
        config.parallelism
    );
    let rows = run_suite(&specs, &config);
    let summary = match summarize(&rows) {
        Ok(summary) => summary,
        Err(err) => {
            eprintln!("summary error: {err}");
            return EXIT_NOT_VALIDATED;
        }
    };

    let export_dir = config.out_dir.join("bench");
    match export(&summary, &rows, &export_dir) {
        Ok(files) => println!(
            "exported {} file(s) to {}",
            files.len(),
            export_dir.display()
        ),
        Err(err) => {
            eprintln!("export error: {err}");
            return EXIT_NOT_VALIDATED;
        }
    }
    print_summary_block(&summary);
    EXIT_OK
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_analyze(args: &AnalyzeArgs) -> i32 {
    let raw = match std::fs::read_to_string(&args.results) {
        Ok(raw) => raw,
        Err(err) => {
            eprintln!("read {}: {err}", args.results.display());
            return EXIT_USAGE;
        }
    };
    let mut rows: Vec<RunResult> = Vec::new();
    for (index, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(row) => rows.push(row),
            Err(err) => {
                eprintln!("{}: line {}: {err}", args.results.display(), index + 1);
                return EXIT_USAGE;
            }
        }
    }
    let summary = match summarize(&rows) {
        Ok(summary) => summary,
        Err(err) => {
            eprintln!("summary error: {err}");
            return EXIT_USAGE;
        }
    };
    print_summary_block(&summary);

    // Recomputation consistency against a sibling summary.json, if present.
    if let Some(stored_path) = args.results.parent().map(|d| d.join("summary.json")) {
        if stored_path.is_file() {
            match std::fs::read(&stored_path) {
                Ok(stored) if stored == summary_json_bytes(&summary) => {
                    println!("\nrecomputation matches stored summary.json");
                }
                Ok(_) => {
                    println!("\nwarning: recomputation differs from stored summary.json");
                }
                Err(err) => eprintln!("read {}: {err}", stored_path.display()),
            }
        }
    }
    EXIT_OK
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("PENTORA_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Scan(args) => cmd_scan(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    std::process::exit(code);
}
