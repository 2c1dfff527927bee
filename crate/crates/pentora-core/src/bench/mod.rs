//! Challenge-suite harness: manifest loading, target deployment, grading,
//! and the measurement pipeline (success rates, cost/time distributions,
//! category breakdowns, success-resource correlations).

pub mod stats;
pub mod targets;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::accounting::{StopReason, UsageTracker};
use crate::agents::prompts::PromptSet;
use crate::agents::JobRunner;
use crate::config::{EngineSelection, ProviderSelection, RunConfig};
use crate::domain::{BudgetPolicy, EvidenceKind, Job, JobMode, TargetDescriptor, VulnCategory};
use crate::reporting::InMemoryMailbox;
use crate::sandbox::{ContainerRuntime, DockerRuntime, SandboxManager};
use crate::store::RunStore;

pub use stats::{cdf_series, median, point_biserial, CdfPoint, StatsError};
pub use targets::{builtin_routes, Route, ToyServer};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("duplicate challenge id: {0}")]
    DuplicateId(String),
    #[error("target build failed: {0}")]
    BuildFailure(String),
    #[error("no results to summarize")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Challenge manifests
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuildRef {
    /// Bundled in-process target; runs without a container engine.
    Builtin { name: String },
    /// Directory with a Dockerfile, relative to the manifest.
    Docker {
        context: String,
        #[serde(default)]
        dockerfile: Option<String>,
    },
    /// Pre-built image reference.
    Image { reference: String },
}

fn default_timeout_secs() -> u64 {
    300
}
fn default_internal_port() -> u16 {
    8000
}

/// One benchmark challenge: a deployable vulnerable target plus its grading
/// oracle. The category is withheld from agents and used only for grading
/// statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChallengeSpec {
    pub id: String,
    pub name: String,
    pub description: String,
    pub build: BuildRef,
    pub target_url_template: String,
    pub flag_env_var: String,
    pub flag_pattern: String,
    pub category: VulnCategory,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_internal_port")]
    pub internal_port: u16,
    /// Directory the manifest was loaded from; resolves build contexts.
    #[serde(skip)]
    pub dir: PathBuf,
}

impl ChallengeSpec {
    fn validate(&self, file: &str) -> Result<(), BenchError> {
        let parse_err = |message: String| BenchError::Parse {
            file: file.to_string(),
            message,
        };
        if self.id.is_empty() {
            return Err(parse_err("field id: empty".into()));
        }
        regex::Regex::new(&self.flag_pattern)
            .map_err(|e| parse_err(format!("field flag_pattern: {e}")))?;
        if let Some(label) = leaked_category_label(&self.description) {
            return Err(parse_err(format!(
                "field description: contains category label {label:?} (categories are withheld from agents)"
            )));
        }
        if self.timeout_secs == 0 {
            return Err(parse_err("field timeout_secs: must be positive".into()));
        }
        Ok(())
    }
}

/// A category label occurring in agent-visible text, if any.
fn leaked_category_label(description: &str) -> Option<&'static str> {
    let lowered = description.to_lowercase();
    for category in VulnCategory::ALL {
        if category == VulnCategory::Other {
            continue;
        }
        let label = category.label();
        let spaced = label.replace('_', " ");
        for needle in [label.to_string(), spaced] {
            if let Some(pos) = lowered.find(&needle) {
                let before_ok = pos == 0 || !lowered.as_bytes()[pos - 1].is_ascii_alphanumeric();
                let end = pos + needle.len();
                let after_ok =
                    end >= lowered.len() || !lowered.as_bytes()[end].is_ascii_alphanumeric();
                if before_ok && after_ok {
                    return Some(label);
                }
            }
        }
    }
    None
}

/// Load every challenge manifest under `path` (one `challenge.json` per
/// challenge directory). Duplicate ids are rejected; specs come back sorted
/// by id.
pub fn load_suite(path: &Path) -> Result<Vec<ChallengeSpec>, BenchError> {
    let mut specs: Vec<ChallengeSpec> = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for dir in entries {
        let manifest = dir.join("challenge.json");
        if !manifest.is_file() {
            continue;
        }
        let file_label = manifest.display().to_string();
        let raw = std::fs::read_to_string(&manifest)?;
        let mut spec: ChallengeSpec =
            serde_json::from_str(&raw).map_err(|e| BenchError::Parse {
                file: file_label.clone(),
                message: e.to_string(),
            })?;
        spec.dir = dir;
        spec.validate(&file_label)?;
        if specs.iter().any(|existing| existing.id == spec.id) {
            return Err(BenchError::DuplicateId(spec.id));
        }
        specs.push(spec);
    }
    specs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(specs)
}

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

/// Freshly random flag value: 128 bits of hex inside the canonical
/// `FLAG{…}` shape. Fresh values per run make memorized answers ungradeable;
/// grading compares the exact value, never just the pattern.
pub fn generate_flag(pattern: &str) -> Result<String, BenchError> {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    let flag = format!("FLAG{{{hex}}}");
    let regex = regex::Regex::new(pattern).map_err(|e| BenchError::Parse {
        file: "<pattern>".into(),
        message: e.to_string(),
    })?;
    if !regex.is_match(&flag) {
        return Err(BenchError::BuildFailure(format!(
            "flag pattern {pattern:?} does not match the canonical FLAG{{128-bit hex}} shape"
        )));
    }
    Ok(flag)
}

/// First match of `pattern` in reading order, or none.
pub fn extract_flag(text: &str, pattern: &regex::Regex) -> Option<String> {
    pattern.find(text).map(|m| m.as_str().to_string())
}

// ---------------------------------------------------------------------------
// Running challenges
// ---------------------------------------------------------------------------

/// One row of the per-challenge metrics table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub challenge_id: String,
    /// Category label; carried so stored rows alone can reproduce the
    /// summary.
    pub category: String,
    pub success: bool,
    pub wall_seconds: f64,
    pub cost_dollars: f64,
    pub regular_input_tokens: u64,
    pub cached_tokens: u64,
    pub output_tokens: u64,
    pub reasoning_tokens: u64,
    pub tool_calls_total: u64,
    pub command_frequency: BTreeMap<String, u64>,
    pub stop_reason: StopReason,
}

impl RunResult {
    pub fn total_tokens(&self) -> u64 {
        self.regular_input_tokens + self.cached_tokens + self.output_tokens
    }

    pub fn total_commands(&self) -> u64 {
        self.command_frequency.values().sum()
    }

    pub fn is_infrastructure(&self) -> bool {
        self.stop_reason == StopReason::Infrastructure
    }

    fn infrastructure(spec: &ChallengeSpec, _why: String) -> Self {
        Self {
            challenge_id: spec.id.clone(),
            category: spec.category.label().to_string(),
            success: false,
            wall_seconds: 0.0,
            cost_dollars: 0.0,
            regular_input_tokens: 0,
            cached_tokens: 0,
            output_tokens: 0,
            reasoning_tokens: 0,
            tool_calls_total: 0,
            command_frequency: BTreeMap::new(),
            stop_reason: StopReason::Infrastructure,
        }
    }
}

enum DeployedTarget {
    InProcess(ToyServer),
    Container {
        runtime: Arc<DockerRuntime>,
        container: String,
        network: String,
    },
}

impl DeployedTarget {
    fn teardown(self) {
        match self {
            DeployedTarget::InProcess(server) => server.stop(),
            DeployedTarget::Container {
                runtime,
                container,
                network,
            } => {
                let _ = runtime.remove(&container);
                let _ = runtime.remove_network(&network);
            }
        }
    }
}

fn deploy_target(
    spec: &ChallengeSpec,
    config: &RunConfig,
    flag: &str,
    job_id: &str,
) -> Result<(DeployedTarget, String), BenchError> {
    match &spec.build {
        BuildRef::Builtin { name } => {
            let routes = builtin_routes(name, flag).ok_or_else(|| {
                BenchError::BuildFailure(format!("unknown builtin target {name:?}"))
            })?;
            let server = ToyServer::start(routes).map_err(BenchError::Io)?;
            let url = spec
                .target_url_template
                .replace("{host}", "127.0.0.1")
                .replace("{port}", &server.port().to_string());
            Ok((DeployedTarget::InProcess(server), url))
        }
        BuildRef::Docker {
            context,
            dockerfile,
        } => {
            let EngineSelection::Docker { binary, endpoint } = &config.engine else {
                return Err(BenchError::BuildFailure(
                    "docker build target requires the docker engine".into(),
                ));
            };
            if dockerfile.is_some() {
                // Non-default dockerfile names are not plumbed through the
                // CLI build yet; keep the manifest honest.
                return Err(BenchError::BuildFailure(
                    "custom dockerfile names are not supported".into(),
                ));
            }
            let runtime = Arc::new(DockerRuntime::new(binary.clone(), endpoint.clone()));
            let tag = format!("pentora-challenge-{}", spec.id);
            let context_dir = spec.dir.join(context);
            runtime
                .build_image(&tag, &context_dir)
                .map_err(|e| BenchError::BuildFailure(e.to_string()))?;
            let network = format!("pentora-{job_id}");
            runtime
                .ensure_network(&network, true)
                .map_err(|e| BenchError::BuildFailure(e.to_string()))?;
            let name = format!("pentora-target-{job_id}");
            let container = runtime
                .run_detached(
                    &tag,
                    &network,
                    &name,
                    &[(spec.flag_env_var.clone(), flag.to_string())],
                )
                .map_err(|e| BenchError::BuildFailure(e.to_string()))?;
            let url = spec
                .target_url_template
                .replace("{host}", &name)
                .replace("{port}", &spec.internal_port.to_string());
            Ok((
                DeployedTarget::Container {
                    runtime,
                    container,
                    network,
                },
                url,
            ))
        }
        BuildRef::Image { reference } => {
            let EngineSelection::Docker { binary, endpoint } = &config.engine else {
                return Err(BenchError::BuildFailure(
                    "image target requires the docker engine".into(),
                ));
            };
            let runtime = Arc::new(DockerRuntime::new(binary.clone(), endpoint.clone()));
            let network = format!("pentora-{job_id}");
            runtime
                .ensure_network(&network, true)
                .map_err(|e| BenchError::BuildFailure(e.to_string()))?;
            let name = format!("pentora-target-{job_id}");
            let container = runtime
                .run_detached(
                    reference,
                    &network,
                    &name,
                    &[(spec.flag_env_var.clone(), flag.to_string())],
                )
                .map_err(|e| BenchError::BuildFailure(e.to_string()))?;
            let url = spec
                .target_url_template
                .replace("{host}", &name)
                .replace("{port}", &spec.internal_port.to_string());
            Ok((
                DeployedTarget::Container {
                    runtime,
                    container,
                    network,
                },
                url,
            ))
        }
    }
}

fn fixture_path_for(config: &RunConfig, challenge_id: &str) -> Option<PathBuf> {
    match &config.provider {
        ProviderSelection::Scripted { fixture } if fixture.is_dir() => {
            Some(fixture.join(format!("{challenge_id}.json")))
        }
        ProviderSelection::Scripted { fixture } => Some(fixture.clone()),
        ProviderSelection::Http { .. } => None,
    }
}

/// Deploy one challenge, run one ctf-mode job against it, grade by exact
/// flag-value equality, and tear everything down. Build failures become
/// `infrastructure` rows instead of aborting the suite.
pub fn run_challenge(spec: &ChallengeSpec, config: &RunConfig) -> RunResult {
    let flag = match generate_flag(&spec.flag_pattern) {
        Ok(flag) => flag,
        Err(err) => return RunResult::infrastructure(spec, err.to_string()),
    };
    let job_id = format!("{}-{:08x}", spec.id, rand::rng().next_u32());

    let (target, target_url) = match deploy_target(spec, config, &flag, &job_id) {
        Ok(deployed) => deployed,
        Err(err) => {
            tracing::warn!(challenge = %spec.id, error = %err, "target deployment failed");
            return RunResult::infrastructure(spec, err.to_string());
        }
    };

    let result = run_job_against(spec, config, &flag, &job_id, &target_url);
    target.teardown();
    match result {
        Ok(row) => row,
        Err(err) => {
            tracing::warn!(challenge = %spec.id, error = %err, "challenge run failed");
            RunResult::infrastructure(spec, err.to_string())
        }
    }
}

fn run_job_against(
    spec: &ChallengeSpec,
    config: &RunConfig,
    flag: &str,
    job_id: &str,
    target_url: &str,
) -> Result<RunResult, BenchError> {
    let mut job_config = config.clone();
    job_config.mode = JobMode::Ctf;
    // The per-challenge timeout caps the hard wall.
    job_config.stop_policy.hard_time_cap_secs = job_config
        .stop_policy
        .hard_time_cap_secs
        .min(spec.timeout_secs.max(1));

    let substitutions = [
        ("target_url", target_url),
        ("flag_pattern", spec.flag_pattern.as_str()),
    ];
    let fixture = fixture_path_for(&job_config, &spec.id);
    let (provider, clock) = job_config
        .build_provider(fixture.as_deref(), &substitutions)
        .map_err(BenchError::BuildFailure)?;
    let runtime = job_config
        .build_runtime()
        .map_err(BenchError::BuildFailure)?;

    let sandbox = Arc::new(SandboxManager::new(
        runtime,
        job_config.sandbox.clone(),
        clock.clone(),
    ));
    let runner = JobRunner {
        sandbox,
        provider,
        mailbox: Arc::new(InMemoryMailbox::new()),
        clock: clock.clone(),
        store: RunStore::new(&job_config.out_dir),
        prompts: PromptSet::load(job_config.prompt_dir.as_deref()),
        config: job_config.clone(),
    };

    let budgets: BudgetPolicy = job_config.stop_policy;
    let job = Job::new(
        job_id,
        JobMode::Ctf,
        TargetDescriptor {
            url: target_url.to_string(),
            description: spec.description.clone(),
            source_path: None,
            withheld_metadata: vec![spec.category.label().to_string()],
        },
        budgets,
    )
    .map_err(|e| BenchError::BuildFailure(e.to_string()))?;

    let tracker = UsageTracker::new(clock);
    let report = runner.run_job(job, &tracker);

    // Binary success: the captured flag must equal the per-run injected
    // value, not merely match the pattern.
    let success = report
        .findings
        .iter()
        .flat_map(|f| f.evidence.iter())
        .any(|e| e.kind == EvidenceKind::CapturedFlag && e.content == flag);

    Ok(RunResult {
        challenge_id: spec.id.clone(),
        category: spec.category.label().to_string(),
        success,
        wall_seconds: report.wall_seconds,
        cost_dollars: report.cost_dollars,
        regular_input_tokens: report.usage.regular_input_tokens,
        cached_tokens: report.usage.cached_tokens,
        output_tokens: report.usage.output_tokens,
        reasoning_tokens: report.usage.reasoning_tokens,
        tool_calls_total: report.usage.total_tool_calls(),
        command_frequency: report.usage.command_frequency.clone(),
        stop_reason: report.stop_reason,
    })
}

/// Run the whole suite with bounded parallelism. Rows come back sorted by
/// challenge id; per-challenge infrastructure failures do not abort the
/// suite.
pub fn run_suite(specs: &[ChallengeSpec], config: &RunConfig) -> Vec<RunResult> {
    let queue: Mutex<Vec<ChallengeSpec>> = Mutex::new(specs.to_vec());
    let results: Mutex<Vec<RunResult>> = Mutex::new(Vec::with_capacity(specs.len()));
    let workers = config.parallelism.max(1).min(specs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let Some(spec) = queue.lock().unwrap().pop() else {
                    break;
                };
                let row = run_challenge(&spec, config);
                results.lock().unwrap().push(row);
            });
        }
    });
    let mut rows = results.into_inner().unwrap();
    rows.sort_by(|a, b| a.challenge_id.cmp(&b.challenge_id));
    rows
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub tool_calls: Option<Correlation>,
    pub cost: Option<Correlation>,
    pub total_tokens: Option<Correlation>,
    pub wall_time: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub n: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub schema: String,
    /// Graded challenges; infrastructure failures are counted separately.
    pub n: usize,
    pub infrastructure_failures: usize,
    pub successes: usize,
    pub failures: usize,
    pub success_rate: f64,
    pub wall: MetricStats,
    pub median_wall_solved: Option<f64>,
    pub median_wall_unsolved: Option<f64>,
    pub total_regular_input_tokens: u64,
    pub total_cached_tokens: u64,
    pub total_output_tokens: u64,
    pub total_reasoning_tokens: u64,
    pub total_cost: f64,
    pub mean_cost: f64,
    pub median_cost: f64,
    pub median_cost_solved: Option<f64>,
    pub median_cost_unsolved: Option<f64>,
    pub total_tool_calls: u64,
    pub mean_tool_calls: f64,
    pub total_commands: u64,
    pub mean_commands: f64,
    pub per_category: Vec<CategoryRow>,
    pub correlations: Correlations,
    pub cdf_time: Vec<CdfPoint>,
    pub cdf_cost: Vec<CdfPoint>,
    pub cdf_tokens: Vec<CdfPoint>,
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

fn split_cdf(rows: &[&RunResult], metric: impl Fn(&RunResult) -> f64) -> Vec<CdfPoint> {
    let all: Vec<f64> = rows.iter().map(|r| metric(r)).collect();
    let solved: Vec<f64> = rows
        .iter()
        .filter(|r| r.success)
        .map(|r| metric(r))
        .collect();
    let unsolved: Vec<f64> = rows
        .iter()
        .filter(|r| !r.success)
        .map(|r| metric(r))
        .collect();
    let mut out = cdf_series("all", &all);
    out.extend(cdf_series("solved", &solved));
    out.extend(cdf_series("unsolved", &unsolved));
    out
}

/// Compute the full metrics table over graded rows.
///
/// Medians are reported overall and split by outcome; correlations relate
/// success to tool calls, cost, total tokens, and wall time, and degenerate
/// inputs surface as absent entries rather than failures.
pub fn summarize(results: &[RunResult]) -> Result<SuiteSummary, BenchError> {
    let graded: Vec<&RunResult> = results.iter().filter(|r| !r.is_infrastructure()).collect();
    if graded.is_empty() {
        return Err(BenchError::Empty);
    }
    let infrastructure_failures = results.len() - graded.len();
    let n = graded.len();
    let nf = n as f64;
    let successes = graded.iter().filter(|r| r.success).count();

    let walls: Vec<f64> = graded.iter().map(|r| r.wall_seconds).collect();
    let costs: Vec<f64> = graded.iter().map(|r| r.cost_dollars).collect();
    let solved_walls: Vec<f64> = graded
        .iter()
        .filter(|r| r.success)
        .map(|r| r.wall_seconds)
        .collect();
    let unsolved_walls: Vec<f64> = graded
        .iter()
        .filter(|r| !r.success)
        .map(|r| r.wall_seconds)
        .collect();
    let solved_costs: Vec<f64> = graded
        .iter()
        .filter(|r| r.success)
        .map(|r| r.cost_dollars)
        .collect();
    let unsolved_costs: Vec<f64> = graded
        .iter()
        .filter(|r| !r.success)
        .map(|r| r.cost_dollars)
        .collect();

    let outcomes: Vec<bool> = graded.iter().map(|r| r.success).collect();
    let correlate = |values: Vec<f64>| match point_biserial(&outcomes, &values) {
        Ok((r, p)) => Some(Correlation { r, p }),
        Err(_) => None,
    };

    let mut per_category: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for row in &graded {
        let entry = per_category.entry(row.category.clone()).or_default();
        entry.0 += 1;
        if row.success {
            entry.1 += 1;
        }
    }
    let per_category: Vec<CategoryRow> = per_category
        .into_iter()
        .map(|(category, (n, successes))| CategoryRow {
            category,
            n,
            successes,
            rate: round4(successes as f64 / n as f64),
        })
        .collect();

    let total_tool_calls: u64 = graded.iter().map(|r| r.tool_calls_total).sum();
    let total_commands: u64 = graded.iter().map(|r| r.total_commands()).sum();
    let total_cost: f64 = costs.iter().sum();

    Ok(SuiteSummary {
        schema: "pentora.summary/1".into(),
        n,
        infrastructure_failures,
        successes,
        failures: n - successes,
        success_rate: round4(successes as f64 / nf),
        wall: MetricStats {
            mean: round4(walls.iter().sum::<f64>() / nf),
            median: round4(median(&walls).unwrap_or(0.0)),
            min: round4(walls.iter().cloned().fold(f64::INFINITY, f64::min)),
            max: round4(walls.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        },
        median_wall_solved: median(&solved_walls).map(round4),
        median_wall_unsolved: median(&unsolved_walls).map(round4),
        total_regular_input_tokens: graded.iter().map(|r| r.regular_input_tokens).sum(),
        total_cached_tokens: graded.iter().map(|r| r.cached_tokens).sum(),
        total_output_tokens: graded.iter().map(|r| r.output_tokens).sum(),
        total_reasoning_tokens: graded.iter().map(|r| r.reasoning_tokens).sum(),
        total_cost: round4(total_cost),
        mean_cost: round4(total_cost / nf),
        median_cost: round4(median(&costs).unwrap_or(0.0)),
        median_cost_solved: median(&solved_costs).map(round4),
        median_cost_unsolved: median(&unsolved_costs).map(round4),
        total_tool_calls,
        mean_tool_calls: round4(total_tool_calls as f64 / nf),
        total_commands,
        mean_commands: round4(total_commands as f64 / nf),
        per_category,
        correlations: Correlations {
            tool_calls: correlate(graded.iter().map(|r| r.tool_calls_total as f64).collect()),
            cost: correlate(costs.clone()),
            total_tokens: correlate(graded.iter().map(|r| r.total_tokens() as f64).collect()),
            wall_time: correlate(walls.clone()),
        },
        cdf_time: split_cdf(&graded, |r| r.wall_seconds),
        cdf_cost: split_cdf(&graded, |r| r.cost_dollars),
        cdf_tokens: split_cdf(&graded, |r| r.total_tokens() as f64),
    })
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn write_cdf_csv(path: &Path, points: &[CdfPoint]) -> std::io::Result<()> {
    let mut out = String::from("series,value,cdf\n");
    for point in points {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(&point.series),
            point.value,
            point.cdf
        ));
    }
    std::fs::write(path, out)
}

/// Write the fixed export set: `results.jsonl`, `summary.json`, three CDF
/// tables, the category flow, and the command heatmap. Identical inputs
/// produce byte-identical files.
pub fn export(
    summary: &SuiteSummary,
    results: &[RunResult],
    dir: &Path,
) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let mut rows = results.to_vec();
    rows.sort_by(|a, b| a.challenge_id.cmp(&b.challenge_id));
    let jsonl: String = rows
        .iter()
        .map(|row| serde_json::to_string(row).expect("serializable row"))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    let path = dir.join("results.jsonl");
    std::fs::write(&path, jsonl)?;
    written.push(path);

    let path = dir.join("summary.json");
    std::fs::write(&path, summary_json_bytes(summary))?;
    written.push(path);

    for (name, points) in [
        ("cdf_time.csv", &summary.cdf_time),
        ("cdf_cost.csv", &summary.cdf_cost),
        ("cdf_tokens.csv", &summary.cdf_tokens),
    ] {
        let path = dir.join(name);
        write_cdf_csv(&path, points)?;
        written.push(path);
    }

    let mut flow = String::from("category,n,successes\n");
    for row in &summary.per_category {
        flow.push_str(&format!(
            "{},{},{}\n",
            csv_field(&row.category),
            row.n,
            row.successes
        ));
    }
    let path = dir.join("category_flow.csv");
    std::fs::write(&path, flow)?;
    written.push(path);

    let mut heatmap = String::from("challenge_id,command,count\n");
    for row in &rows {
        for (command, count) in &row.command_frequency {
            heatmap.push_str(&format!(
                "{},{},{}\n",
                csv_field(&row.challenge_id),
                csv_field(command),
                count
            ));
        }
    }
    let path = dir.join("command_heatmap.csv");
    std::fs::write(&path, heatmap)?;
    written.push(path);

    Ok(written)
}

/// Canonical bytes of `summary.json`; `analyze` reproduces these exactly.
pub fn summary_json_bytes(summary: &SuiteSummary) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(summary).expect("serializable summary");
    bytes.push(b'\n');
    bytes
}
