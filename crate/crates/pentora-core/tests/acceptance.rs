//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them) and enforcing its
//! runtime bound.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pentora_core::accounting::{
    compute_cost, CostModel, StopPolicy, StopReason, UsageRecord, UsageTracker,
};
use pentora_core::agents::prompts::PromptSet;
use pentora_core::agents::JobRunner;
use pentora_core::bench::{
    builtin_routes, load_suite, point_biserial, run_challenge, summarize, RunResult, ToyServer,
};
use pentora_core::clock::VirtualClock;
use pentora_core::config::{EngineSelection, ProviderSelection, RunConfig};
use pentora_core::domain::{EvidenceKind, Job, JobMode, JobState, TargetDescriptor};
use pentora_core::gateway::scripted::{respond_with_call, respond_with_text, FixtureStep};
use pentora_core::gateway::{ScriptedProvider, TokenUsage};
use pentora_core::reporting::InMemoryMailbox;
use pentora_core::sandbox::{
    ContainerRuntime, ContainerSpec, ExecPayload, FakeRuntime, RawExec, SandboxConfig,
    SandboxError, SandboxManager,
};
use pentora_core::store::RunStore;

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn scripted_config(fixture: PathBuf, out_dir: PathBuf) -> RunConfig {
    RunConfig {
        provider: ProviderSelection::Scripted { fixture },
        engine: EngineSelection::Fake,
        out_dir,
        ..RunConfig::default()
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: cost-model reconciliation
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_cost_model_reconciliation() {
    let record = UsageRecord {
        regular_input_tokens: 3_244_880,
        cached_tokens: 50_524_032,
        output_tokens: 1_100_790,
        ..UsageRecord::default()
    };
    let model = CostModel::default();
    // Warm the code path, then time the call itself.
    let _ = compute_cost(&record, &model);
    let started = Instant::now();
    let cost = compute_cost(&record, &model);
    let elapsed = started.elapsed();

    let dollars = cost.dollars();
    assert!(
        (dollars - 21.38).abs() <= 0.01,
        "total cost {dollars} outside 21.38 ± 0.01"
    );
    let per_challenge = dollars / 104.0;
    assert!(
        (per_challenge - 0.206).abs() <= 0.001,
        "per-challenge cost {per_challenge} outside 0.206 ± 0.001"
    );
    assert!(elapsed < Duration::from_millis(1), "took {elapsed:?}");
    println!(
        "PASS criterion 1: cost model reconciles (${dollars:.4} total, ${per_challenge:.4}/challenge) in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: commands-average reconciliation
// ---------------------------------------------------------------------------

fn synthetic_rows_104() -> Vec<RunResult> {
    let mut rows = Vec::new();
    for i in 0..104usize {
        let success = i < 80;
        let commands = if i < 13 { 26u64 } else { 25 }; // 13·26 + 91·25 = 2613
        rows.push(RunResult {
            challenge_id: format!("syn-{i:03}"),
            category: ["xss", "ssrf", "sql_injection", "misconfiguration"][i % 4].into(),
            success,
            wall_seconds: if success {
                90.0 + i as f64
            } else {
                420.0 + i as f64
            },
            cost_dollars: if success {
                0.05 + 0.001 * i as f64
            } else {
                0.31 + 0.002 * i as f64
            },
            regular_input_tokens: 25_000 + 10 * i as u64,
            cached_tokens: 480_000 + 100 * i as u64,
            output_tokens: 9_000 + 5 * i as u64,
            reasoning_tokens: 5_000,
            tool_calls_total: if success {
                12 + (i % 5) as u64
            } else {
                47 + (i % 9) as u64
            },
            command_frequency: std::collections::BTreeMap::from([
                ("curl".to_string(), commands - 3),
                ("bash".to_string(), 2),
                ("nmap".to_string(), 1),
            ]),
            stop_reason: if success {
                StopReason::Validated
            } else {
                StopReason::ToolCalls
            },
        });
    }
    rows
}

#[test]
fn criterion_2_commands_average_reconciliation() {
    let started = Instant::now();
    let summary = summarize(&synthetic_rows_104()).unwrap();
    let elapsed = started.elapsed();

    assert_eq!(summary.n, 104);
    assert_eq!(summary.total_commands, 2613);
    assert!(
        (summary.mean_commands - 25.1).abs() <= 0.05,
        "mean commands {} outside 25.1 ± 0.05",
        summary.mean_commands
    );
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "PASS criterion 2: 2613 commands over 104 rows average {:.3} per challenge in {elapsed:?}",
        summary.mean_commands
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: point-biserial oracle equivalence
// ---------------------------------------------------------------------------

/// Independent Pearson implementation (sum formula) on 1/0-coded outcomes.
fn pearson_oracle(outcomes: &[bool], values: &[f64]) -> f64 {
    let n = outcomes.len() as f64;
    let xs: Vec<f64> = outcomes
        .iter()
        .map(|&o| if o { 1.0 } else { 0.0 })
        .collect();
    let sum_x: f64 = xs.iter().sum();
    let sum_y: f64 = values.iter().sum();
    let sum_xy: f64 = xs.iter().zip(values).map(|(x, y)| x * y).sum();
    let sum_x2: f64 = xs.iter().map(|x| x * x).sum();
    let sum_y2: f64 = values.iter().map(|y| y * y).sum();
    (n * sum_xy - sum_x * sum_y)
        / ((n * sum_x2 - sum_x * sum_x).sqrt() * (n * sum_y2 - sum_y * sum_y).sqrt())
}

#[test]
fn criterion_3_point_biserial_oracle_equivalence() {
    let started = Instant::now();

    // Hand-computable case returns exactly −1.0.
    let (r, _) = point_biserial(&[true, true, false, false], &[1.0, 1.0, 3.0, 3.0]).unwrap();
    assert_eq!(r, -1.0, "hand case must be exactly -1.0");

    let mut rng = StdRng::seed_from_u64(0xACCE97);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(4..=50usize);
        // Guarantee both classes, then shuffle membership via random draw.
        let mut outcomes: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        outcomes[0] = true;
        outcomes[1] = false;
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();

        let (r, p) = point_biserial(&outcomes, &values)
            .unwrap_or_else(|e| panic!("case {case}: unexpected degenerate input: {e}"));
        let oracle = pearson_oracle(&outcomes, &values);
        let delta = (r - oracle).abs();
        worst = worst.max(delta);
        assert!(
            delta <= 1e-12,
            "case {case} (n={n}): |r - pearson| = {delta:e} exceeds 1e-12"
        );
        assert!((0.0..=1.0).contains(&p));
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "PASS criterion 3: 100 random datasets agree with the Pearson oracle (worst |Δ| = {worst:.2e}) in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: early-stopping enforcement
// ---------------------------------------------------------------------------

fn runner_for(
    provider: ScriptedProvider,
    clock: Arc<VirtualClock>,
    policy: StopPolicy,
    out: &Path,
) -> (JobRunner, Job) {
    let config = RunConfig {
        provider: ProviderSelection::Scripted {
            fixture: PathBuf::from("inline"),
        },
        engine: EngineSelection::Fake,
        out_dir: out.to_path_buf(),
        stop_policy: policy,
        ..RunConfig::default()
    };
    let runner = JobRunner {
        sandbox: Arc::new(SandboxManager::new(
            Arc::new(FakeRuntime::new()),
            SandboxConfig::default(),
            clock.clone(),
        )),
        provider: Arc::new(provider),
        mailbox: Arc::new(InMemoryMailbox::new()),
        clock,
        store: RunStore::new(out),
        prompts: PromptSet::default(),
        config,
    };
    let job = Job::new(
        format!("stop-{:x}", rand::random::<u32>()),
        JobMode::Ctf,
        TargetDescriptor {
            url: "http://127.0.0.1:1/".into(),
            description: "budget enforcement target".into(),
            ..TargetDescriptor::default()
        },
        policy,
    )
    .unwrap();
    (runner, job)
}

/// A provider that never terminates: one probing tool call per step, forever.
fn endless_fixture(usage: TokenUsage, latency_ms: u64) -> ScriptedProvider {
    let mut step = respond_with_call("run_command", &[("command", "echo probing")], usage);
    step.latency_ms = latency_ms;
    ScriptedProvider::new(vec![step]).looping()
}

#[test]
fn criterion_4_early_stopping_enforcement() {
    let started = Instant::now();

    // (a) Tool-call threshold alone: stop within one dispatch of 40.
    {
        let out = tempfile::tempdir().unwrap();
        let clock = Arc::new(VirtualClock::new());
        let policy = StopPolicy::only_tool_calls(40);
        let provider = endless_fixture(TokenUsage::zero(), 0).with_clock(clock.as_ref().clone());
        let (runner, job) = runner_for(provider, clock.clone(), policy, out.path());
        let tracker = UsageTracker::new(clock);
        let report = runner.run_job(job, &tracker);
        assert_eq!(report.stop_reason, StopReason::ToolCalls);
        let total = report.usage.total_tool_calls();
        assert!(
            (40..=41).contains(&total),
            "stopped after {total} dispatches, not within one of 40"
        );
    }

    // (b) Cost threshold alone: $0.03 of simulated usage per step breaches
    // $0.30 at step 11; at most one further dispatch may run.
    {
        let out = tempfile::tempdir().unwrap();
        let clock = Arc::new(VirtualClock::new());
        let policy = StopPolicy::only_cost(0.30);
        let usage = TokenUsage {
            output: 3_000, // $0.03 at $10/1M
            ..TokenUsage::default()
        };
        let provider = endless_fixture(usage, 0).with_clock(clock.as_ref().clone());
        let (runner, job) = runner_for(provider, clock.clone(), policy, out.path());
        let tracker = UsageTracker::new(clock);
        let report = runner.run_job(job, &tracker);
        assert_eq!(report.stop_reason, StopReason::Cost);
        assert!(
            report.cost_dollars > 0.30 && report.cost_dollars <= 0.36,
            "cost {} not within one step of the $0.30 cap",
            report.cost_dollars
        );
        let total = report.usage.total_tool_calls();
        assert!((10..=11).contains(&total), "dispatches: {total}");
    }

    // (c) Soft wall-clock alone on a simulated clock: 30 s per provider
    // call reaches 300 s at step 10 with no recent gate progress.
    {
        let out = tempfile::tempdir().unwrap();
        let clock = Arc::new(VirtualClock::new());
        let policy = StopPolicy::only_soft_time(300);
        let provider =
            endless_fixture(TokenUsage::zero(), 30_000).with_clock(clock.as_ref().clone());
        let (runner, job) = runner_for(provider, clock.clone(), policy, out.path());
        let tracker = UsageTracker::new(clock);
        let report = runner.run_job(job, &tracker);
        assert_eq!(report.stop_reason, StopReason::SoftTime);
        assert!(
            report.wall_seconds >= 300.0 && report.wall_seconds <= 330.0,
            "simulated wall {} not within one step of 300 s",
            report.wall_seconds
        );
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "PASS criterion 4: tool-call, cost, and soft-time thresholds each stop within one dispatch in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: end-to-end ctf success
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_end_to_end_ctf_success() {
    let started = Instant::now();

    // Solving fixture: the captured flag must equal the per-run injected
    // value, and the container must be torn down.
    let flag = "FLAG{00112233445566778899aabbccddeeff}";
    let server = ToyServer::start(builtin_routes("hidden_path", flag).unwrap()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let config = scripted_config(
        repo_path("fixtures/solve/hidden-path.json"),
        out.path().into(),
    );
    let (provider, clock) = config
        .build_provider(None, &[("target_url", server.url().as_str())])
        .unwrap();
    let sandbox = Arc::new(SandboxManager::new(
        Arc::new(FakeRuntime::new()),
        SandboxConfig::default(),
        clock.clone(),
    ));
    let runner = JobRunner {
        sandbox: sandbox.clone(),
        provider,
        mailbox: Arc::new(InMemoryMailbox::new()),
        clock: clock.clone(),
        store: RunStore::new(out.path()),
        prompts: PromptSet::default(),
        config: config.clone(),
    };
    let job = Job::new(
        "acc5-solve",
        JobMode::Ctf,
        TargetDescriptor {
            url: server.url(),
            description: "a tiny notes site".into(),
            ..TargetDescriptor::default()
        },
        config.stop_policy,
    )
    .unwrap();
    let tracker = UsageTracker::new(clock);
    let report = runner.run_job(job, &tracker);
    server.stop();

    assert!(report.success, "error: {:?}", report.error);
    let captured = report
        .findings
        .iter()
        .flat_map(|f| f.evidence.iter())
        .find(|e| e.kind == EvidenceKind::CapturedFlag)
        .expect("captured_flag evidence");
    assert_eq!(
        captured.content, flag,
        "captured flag must equal the injected value"
    );
    assert_eq!(report.job.state, JobState::TornDown);
    assert!(
        sandbox.handle_for("acc5-solve").is_none(),
        "container handle must be dead"
    );

    // Non-solving fixture through the full harness path: graded false with
    // stop_reason = tool_calls.
    let specs = load_suite(&repo_path("challenges")).unwrap();
    let spec = specs.iter().find(|s| s.id == "hidden-path").unwrap();
    let out = tempfile::tempdir().unwrap();
    let config = scripted_config(repo_path("fixtures/never-solves.json"), out.path().into());
    let row = run_challenge(spec, &config);
    assert!(!row.success);
    assert_eq!(row.stop_reason, StopReason::ToolCalls);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!(
        "PASS criterion 5: toy challenge solves with exact flag capture and fails at the tool cap in {elapsed:?}"
    );
}

// Optional real-engine variant of criterion 5; requires a container engine.
#[test]
#[ignore]
fn criterion_5_real_engine_variant() {
    use pentora_core::bench::BuildRef;
    let specs = load_suite(&repo_path("challenges")).unwrap();
    let mut spec = specs.into_iter().find(|s| s.id == "hidden-path").unwrap();
    spec.build = BuildRef::Docker {
        context: ".".into(),
        dockerfile: None,
    };
    let out = tempfile::tempdir().unwrap();
    let mut config = scripted_config(repo_path("fixtures/solve"), out.path().into());
    config.engine = EngineSelection::Docker {
        binary: "docker".into(),
        endpoint: None,
    };
    config.image = "alpine:latest".into();
    let started = Instant::now();
    let row = run_challenge(&spec, &config);
    assert!(row.success, "stop_reason {:?}", row.stop_reason);
    assert!(started.elapsed() < Duration::from_secs(60));
    println!(
        "PASS criterion 5 (real engine): solved in {:?}",
        started.elapsed()
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: lifecycle and secret purging under fault injection
// ---------------------------------------------------------------------------

/// Runtime wrapper whose remove() always fails, exercising the leak path.
struct StuckEngine {
    inner: FakeRuntime,
}

impl ContainerRuntime for StuckEngine {
    fn create(&self, spec: &ContainerSpec) -> Result<String, SandboxError> {
        self.inner.create(spec)
    }
    fn exec(
        &self,
        id: &str,
        payload: &ExecPayload,
        timeout: Duration,
    ) -> Result<RawExec, SandboxError> {
        self.inner.exec(id, payload, timeout)
    }
    fn remove(&self, _id: &str) -> Result<(), SandboxError> {
        Err(SandboxError::EngineUnavailable("engine wedged".into()))
    }
}

#[test]
fn criterion_6_lifecycle_and_secret_purging() {
    let started = Instant::now();
    let parent = tempfile::tempdir().unwrap();

    for i in 0..50u64 {
        let mut rng = StdRng::seed_from_u64(i);
        let secret = format!("job-secret-{i}-{:016x}", rng.random::<u64>());
        let out = parent.path().join(format!("run-{i}"));

        // Fault scenario mix: solves, budget exhaustion, provider failures,
        // exec timeouts, secret echoes; every 7th run also wedges teardown.
        let scenario = i % 5;
        let oracle = r#"{"kind": "flag_pattern", "pattern": "FLAG\\{[a-z0-9]+\\}"}"#;
        let provider = match scenario {
            0 => ScriptedProvider::new(vec![
                respond_with_call("run_command", &[("command", "echo probing")], TokenUsage::zero()),
                respond_with_text(
                    &format!("```poc\n{{\"kind\": \"payload\", \"body\": \"echo FLAG{{fault{i}}}\", \"oracle\": {oracle}}}\n```"),
                    TokenUsage::zero(),
                ),
            ]),
            1 => endless_fixture(TokenUsage::zero(), 0),
            2 => ScriptedProvider::from_fixture_steps(vec![FixtureStep {
                error: Some("unavailable".into()),
                ..Default::default()
            }])
            .unwrap()
            .looping(),
            3 => ScriptedProvider::new(vec![
                respond_with_call("run_command", &[("command", "sleep 30; echo late")], TokenUsage::zero()),
                respond_with_text("timed out, giving up", TokenUsage::zero()),
            ])
            .looping(),
            _ => ScriptedProvider::new(vec![
                respond_with_call("run_command", &[("command", "printenv API_TOKEN")], TokenUsage::zero()),
                respond_with_text("echoed credentials, done", TokenUsage::zero()),
            ])
            .looping(),
        };

        let clock = Arc::new(VirtualClock::new());
        let runtime: Arc<dyn ContainerRuntime> = if i % 7 == 0 {
            Arc::new(StuckEngine {
                inner: FakeRuntime::new(),
            })
        } else {
            Arc::new(FakeRuntime::new())
        };
        let mut config = RunConfig {
            provider: ProviderSelection::Scripted {
                fixture: PathBuf::from("inline"),
            },
            engine: EngineSelection::Fake,
            out_dir: out.clone(),
            ..RunConfig::default()
        };
        config.stop_policy = StopPolicy::only_tool_calls(5);
        config.max_attempts = 1;
        config.sandbox.default_timeout_secs = 1;
        config.secrets.insert("API_TOKEN".into(), secret.clone());

        let sandbox = Arc::new(SandboxManager::new(
            runtime,
            config.sandbox.clone(),
            clock.clone(),
        ));
        let runner = JobRunner {
            sandbox: sandbox.clone(),
            provider: Arc::new(provider),
            mailbox: Arc::new(InMemoryMailbox::new()),
            clock: clock.clone(),
            store: RunStore::new(&out),
            prompts: PromptSet::default(),
            config: config.clone(),
        };
        let job_id = format!("fault-{i}");
        let job = Job::new(
            &job_id,
            JobMode::Ctf,
            TargetDescriptor {
                url: "http://127.0.0.1:1/".into(),
                description: "fault injection target".into(),
                ..TargetDescriptor::default()
            },
            config.stop_policy,
        )
        .unwrap();
        let tracker = UsageTracker::new(clock);
        let report = runner.run_job(job, &tracker);

        // Terminal job, dead handle.
        assert_eq!(report.job.state, JobState::TornDown, "run {i}");
        assert!(
            sandbox.handle_for(&job_id).is_none(),
            "run {i}: handle still live"
        );

        // Zero occurrences of the secret value anywhere under the run dir.
        let run_dir = out.join("runs").join(&job_id);
        assert!(run_dir.is_dir(), "run {i}: missing run dir");
        let mut stack = vec![run_dir.clone()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let text = std::fs::read_to_string(&path).unwrap_or_default();
                    assert!(
                        !text.contains(&secret),
                        "run {i}: secret leaked into {}",
                        path.display()
                    );
                }
            }
        }

        if i % 7 == 0 {
            assert!(
                run_dir.join("container_leak.json").is_file(),
                "run {i}: wedged teardown must record a leak"
            );
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "PASS criterion 6: 50 fault-injection runs all terminal, containers dead, zero secret leaks in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: isolation and sharing
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_isolation_and_sharing() {
    let started = Instant::now();

    // Same job: files written via one agent surface are readable by the
    // coordinator's surface.
    {
        let clock = Arc::new(VirtualClock::new());
        let sandbox = SandboxManager::new(
            Arc::new(FakeRuntime::new()),
            SandboxConfig::default(),
            clock,
        );
        let handle = sandbox
            .create_job_container("shared-job", "img", "net", &Default::default())
            .unwrap();
        sandbox
            .exec_command(&handle, "echo from-sandbox-agent > recon.txt", None)
            .unwrap();
        let read = sandbox
            .exec_script(&handle, "print(open('recon.txt').read().strip())", None)
            .unwrap();
        assert_eq!(read.stdout, "from-sandbox-agent\n");
    }

    // Distinct concurrent jobs: mutually invisible filesystems.
    {
        let clock = Arc::new(VirtualClock::new());
        let sandbox = Arc::new(SandboxManager::new(
            Arc::new(FakeRuntime::new()),
            SandboxConfig::default(),
            clock,
        ));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let sandbox = Arc::clone(&sandbox);
                std::thread::spawn(move || {
                    let job = format!("iso-{i}");
                    let handle = sandbox
                        .create_job_container(&job, "img", "net", &Default::default())
                        .unwrap();
                    sandbox
                        .exec_command(&handle, &format!("echo secret-{i} > marker-{i}.txt"), None)
                        .unwrap();
                    // Own marker readable; every other job's marker invisible.
                    let own = sandbox
                        .exec_command(&handle, &format!("cat marker-{i}.txt"), None)
                        .unwrap();
                    assert_eq!(own.stdout.trim(), format!("secret-{i}"));
                    for other in 0..4 {
                        if other != i {
                            let foreign = sandbox
                                .exec_command(&handle, &format!("cat marker-{other}.txt"), None)
                                .unwrap();
                            assert_ne!(foreign.exit_code, 0, "job {i} can see job {other}'s file");
                        }
                    }
                })
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
    }

    let elapsed = started.elapsed();
    println!("PASS criterion 7: same-job sharing and cross-job isolation hold in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 8: statistics coverage on constructed data
// ---------------------------------------------------------------------------

/// Headline benchmark outcomes depend on a frontier model and proprietary
/// challenge content, so they are not reproduced here. Instead the harness
/// must emit every defined statistic and reproduce known values on
/// constructed datasets (criteria 1–3 are the quantitative substitute).
#[test]
fn criterion_8_statistics_coverage() {
    let summary = summarize(&synthetic_rows_104()).unwrap();

    // Aggregate metrics table, complete.
    assert_eq!(summary.n, 104);
    assert_eq!(summary.successes + summary.failures, 104);
    assert!(summary.success_rate > 0.0);
    assert!(summary.wall.min <= summary.wall.median && summary.wall.median <= summary.wall.max);
    assert!(summary.wall.mean > 0.0);
    assert!(summary.total_regular_input_tokens > 0);
    assert!(summary.total_cached_tokens > 0);
    assert!(summary.total_output_tokens > 0);
    assert!(summary.total_reasoning_tokens > 0);
    assert!(summary.total_cost > 0.0 && summary.mean_cost > 0.0 && summary.median_cost > 0.0);
    assert!(summary.total_tool_calls > 0 && summary.mean_tool_calls > 0.0);
    assert!(summary.total_commands > 0 && summary.mean_commands > 0.0);

    // Outcome-split medians (solved faster and cheaper by construction).
    assert!(summary.median_wall_solved.unwrap() < summary.median_wall_unsolved.unwrap());
    assert!(summary.median_cost_solved.unwrap() < summary.median_cost_unsolved.unwrap());

    // All four named success-resource correlations, negative by
    // construction here.
    for (name, corr) in [
        ("tool_calls", &summary.correlations.tool_calls),
        ("cost", &summary.correlations.cost),
        ("total_tokens", &summary.correlations.total_tokens),
        ("wall_time", &summary.correlations.wall_time),
    ] {
        let corr = corr
            .as_ref()
            .unwrap_or_else(|| panic!("{name} correlation absent"));
        assert!(corr.r < 0.0, "{name} correlation not negative: {}", corr.r);
        assert!(corr.p < 0.001, "{name} p-value not significant: {}", corr.p);
    }

    // Category partition and CDF tables.
    assert_eq!(summary.per_category.iter().map(|c| c.n).sum::<usize>(), 104);
    for cdf in [&summary.cdf_time, &summary.cdf_cost, &summary.cdf_tokens] {
        assert!(!cdf.is_empty());
    }

    println!(
        "PASS criterion 8: harness emits the full statistics set; known-value checks are criteria 1–3"
    );
}
