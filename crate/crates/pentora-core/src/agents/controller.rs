//! The single-pass, evidence-gated job controller.
//!
//! One controller drives one job through hypothesis, targeted dispatch,
//! PoC assembly, and validation, with a global retry loop bounded by
//! `max_attempts`. In ctf mode the coordinator operates alone and
//! validation is mechanical (execute + flag extraction); in whitebox mode
//! the coordinator may delegate to sandbox agents and every candidate goes
//! through a validation agent. The container is always torn down, whatever
//! happens in between.

use std::path::PathBuf;
use std::sync::atomic::AtomicU32;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::accounting::{compute_cost, StopReason, UsageRecord, UsageTracker};
use crate::clock::Clock;
use crate::config::RunConfig;
use crate::domain::{
    transition, DomainError, EvidenceItem, EvidenceKind, Finding, Job, JobEvent, JobMode, JobState,
    OracleSpec, PocArtifact, PocKind, Severity, Verdict, VulnCategory,
};
use crate::gateway::{Provider, ProviderParams};
use crate::reporting::{synthesize_report, MailBackend};
use crate::sandbox::{SandboxManager, SecretScope};
use crate::store::{RunDir, RunStore};

use super::agent_loop::{persist_transcript, run_agent_loop, AgentEnv, AgentOutcome};
use super::prompts::{coordinator_prompt, validation_prompt, PromptSet};
use super::{
    parse_poc_block, parse_verdict_block, registry_for, AgentContext, AgentRole, ControllerState,
    Phase, GATE_CANDIDATE,
};

/// Terminal summary of one job run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobReport {
    pub job: Job,
    pub success: bool,
    pub stop_reason: StopReason,
    pub attempts: u32,
    pub findings: Vec<Finding>,
    pub usage: UsageRecord,
    pub cost_dollars: f64,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Bundled dependencies for running jobs.
pub struct JobRunner {
    pub sandbox: Arc<SandboxManager>,
    pub provider: Arc<dyn Provider>,
    pub mailbox: Arc<dyn MailBackend>,
    pub clock: Arc<dyn Clock>,
    pub config: RunConfig,
    pub store: RunStore,
    pub prompts: PromptSet,
}

/// Drive one job end to end. Convenience wrapper over [`JobRunner::run_job`].
pub fn run_job(runner: &JobRunner, job: Job, tracker: &UsageTracker) -> JobReport {
    runner.run_job(job, tracker)
}

struct DriveResult {
    event: JobEvent,
    stop_reason: StopReason,
    findings: Vec<Finding>,
    error: Option<String>,
}

impl JobRunner {
    pub fn run_job(&self, job: Job, tracker: &UsageTracker) -> JobReport {
        let now = || self.clock.now_ms();
        if job.state != JobState::Created {
            return self.report_without_run(
                job,
                StopReason::Infrastructure,
                "job not in created state",
            );
        }

        let run_dir = match self.store.create(&job.id) {
            Ok(dir) => dir,
            Err(err) => {
                return self.report_without_run(job, StopReason::Infrastructure, &err.to_string())
            }
        };
        run_dir.add_redactions(self.config.secrets.values().cloned());

        let mut job = match transition(&job, JobEvent::Start, now()) {
            Ok(j) => j,
            Err(err) => {
                return self.report_without_run(job, StopReason::Infrastructure, &err.to_string())
            }
        };

        let network = self.config.network_for(&job.id);
        let owns_network = self.config.network.is_none();
        if let Err(err) = self
            .sandbox
            .runtime()
            .ensure_network(&network, self.config.network_internal)
        {
            tracing::warn!(job = %job.id, error = %err, "network setup failed, continuing");
        }

        let mut secrets = SecretScope::new(self.config.secrets.clone());
        let handle =
            match self
                .sandbox
                .create_job_container(&job.id, &self.config.image, &network, &secrets)
            {
                Ok(handle) => handle,
                Err(err) => {
                    // Nothing to tear down; the job still terminates cleanly.
                    job = transition(&job, JobEvent::Fail, now()).unwrap_or(job);
                    job = transition(&job, JobEvent::Teardown, now()).unwrap_or(job);
                    return self.finalize(
                        job,
                        StopReason::Infrastructure,
                        0,
                        Vec::new(),
                        tracker.snapshot(),
                        &run_dir,
                        Some(err.to_string()),
                    );
                }
            };

        let params = ProviderParams {
            model: self.config.model.clone(),
            temperature: None,
        };
        let state = Mutex::new(ControllerState::new());
        let agent_seq = AtomicU32::new(0);
        let drive = {
            let env = AgentEnv {
                job: &job,
                sandbox: &self.sandbox,
                handle: &handle,
                tracker,
                provider: self.provider.as_ref(),
                params: &params,
                config: &self.config,
                prompts: &self.prompts,
                mailbox: self.mailbox.as_ref(),
                clock: self.clock.as_ref(),
                run_dir: Some(&run_dir),
                state: &state,
                agent_seq: &agent_seq,
            };
            self.drive(&env)
        };

        // Teardown totality: the container dies and secrets are purged on
        // every path out of the drive loop.
        let _ = self.sandbox.teardown(&handle, &mut secrets, Some(&run_dir));
        if owns_network {
            let _ = self.sandbox.runtime().remove_network(&network);
        }

        job = transition(&job, drive.event, now()).unwrap_or(job);
        job = transition(&job, JobEvent::Teardown, now()).unwrap_or(job);

        let mut state = state.into_inner().unwrap();
        state.phase = Phase::Done;
        let _ = run_dir.write_json(
            "job.json",
            &serde_json::json!({
                "schema": "pentora.job/1",
                "job": job,
                "stop_reason": drive.stop_reason,
                "controller": state,
            }),
        );

        self.finalize(
            job,
            drive.stop_reason,
            state.attempts,
            drive.findings,
            tracker.snapshot(),
            &run_dir,
            drive.error,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finalize(
        &self,
        job: Job,
        stop_reason: StopReason,
        attempts: u32,
        findings: Vec<Finding>,
        usage: UsageRecord,
        run_dir: &RunDir,
        error: Option<String>,
    ) -> JobReport {
        let cost = compute_cost(&usage, &self.config.cost_model);
        if let Err(err) = synthesize_report(
            &job,
            &findings,
            &usage,
            cost.rounded_dollars(),
            stop_reason,
            attempts,
            run_dir,
            self.config.anonymize,
        ) {
            tracing::warn!(job = %job.id, error = %err, "report synthesis failed");
        }
        JobReport {
            success: stop_reason == StopReason::Validated,
            stop_reason,
            attempts,
            findings,
            cost_dollars: cost.rounded_dollars(),
            wall_seconds: usage.wall_seconds(),
            usage,
            run_dir: Some(run_dir.path().to_path_buf()),
            error,
            job,
        }
    }

    fn report_without_run(&self, job: Job, stop_reason: StopReason, error: &str) -> JobReport {
        JobReport {
            job,
            success: false,
            stop_reason,
            attempts: 0,
            findings: Vec::new(),
            usage: UsageRecord::default(),
            cost_dollars: 0.0,
            wall_seconds: 0.0,
            run_dir: None,
            error: Some(error.to_string()),
        }
    }

    fn drive(&self, env: &AgentEnv<'_>) -> DriveResult {
        let mut ctx = AgentContext::new(
            "coordinator",
            AgentRole::Coordinator,
            env.job.id.clone(),
            coordinator_prompt(&self.prompts, env.job),
            registry_for(AgentRole::Coordinator, env.job.mode),
        );
        ctx.push_user("Begin the assessment.");

        let result = loop {
            let outcome = run_agent_loop(
                &mut ctx,
                env,
                &env.job.budgets,
                self.config.max_steps_per_agent,
            );
            {
                let mut state = env.state.lock().unwrap();
                if state.phase == Phase::Hypothesis {
                    state.phase = Phase::Dispatch;
                }
            }
            match outcome {
                Err(err) => {
                    break DriveResult {
                        event: JobEvent::Fail,
                        stop_reason: StopReason::ProviderFailure,
                        findings: Vec::new(),
                        error: Some(err.to_string()),
                    }
                }
                Ok(AgentOutcome::BudgetStop { reason, .. }) => {
                    break DriveResult {
                        event: JobEvent::Exhaust,
                        stop_reason: reason,
                        findings: Vec::new(),
                        error: None,
                    }
                }
                Ok(AgentOutcome::FinalText(_)) => {
                    let attempts = {
                        let mut state = env.state.lock().unwrap();
                        state.attempts += 1;
                        state.attempts
                    };
                    if attempts >= self.config.max_attempts {
                        break DriveResult {
                            event: JobEvent::Exhaust,
                            stop_reason: StopReason::AttemptsExhausted,
                            findings: Vec::new(),
                            error: None,
                        };
                    }
                    ctx.push_user(
                        "No validated finding yet. Reassess the attack surface and try a \
                         different approach.",
                    );
                }
                Ok(AgentOutcome::Candidate { block, .. }) => {
                    let artifact = block.artifact();
                    let gates_ok = {
                        let mut state = env.state.lock().unwrap();
                        if state.assembly_gates_satisfied() {
                            state.phase = Phase::Assembly;
                            state.candidate = Some(artifact.clone());
                            if let Some(gate) = state.gate_mut(GATE_CANDIDATE) {
                                if gate.satisfy("coordinator poc block", env.clock.now_ms()) {
                                    env.tracker.note_progress();
                                }
                            }
                            true
                        } else {
                            false
                        }
                    };
                    if !gates_ok {
                        ctx.push_user(
                            "Evidence gate unsatisfied: no successful probe observation has \
                             been recorded yet. Probe the target first, then re-submit the \
                             proof of concept.",
                        );
                        continue;
                    }

                    env.state.lock().unwrap().phase = Phase::Validation;
                    let verdict = validate_poc(&artifact, env);
                    if verdict.passed() {
                        let finding = Finding::from_validated(
                            format!("{}-f1", env.job.id),
                            block
                                .title
                                .clone()
                                .unwrap_or_else(|| "Validated proof of concept".into()),
                            block.category.unwrap_or(VulnCategory::Other),
                            block.severity.unwrap_or(Severity::High),
                            artifact,
                            verdict,
                        );
                        match finding {
                            Ok(finding) => {
                                break DriveResult {
                                    event: JobEvent::Validate,
                                    stop_reason: StopReason::Validated,
                                    findings: vec![finding],
                                    error: None,
                                }
                            }
                            Err(err) => {
                                break DriveResult {
                                    event: JobEvent::Fail,
                                    stop_reason: StopReason::ProviderFailure,
                                    findings: Vec::new(),
                                    error: Some(err.to_string()),
                                }
                            }
                        }
                    }

                    let attempts = {
                        let mut state = env.state.lock().unwrap();
                        state.phase = Phase::Dispatch;
                        state.attempts += 1;
                        state.attempts
                    };
                    if attempts >= self.config.max_attempts {
                        break DriveResult {
                            event: JobEvent::Exhaust,
                            stop_reason: StopReason::AttemptsExhausted,
                            findings: Vec::new(),
                            error: None,
                        };
                    }
                    ctx.push_user(format!(
                        "Validation failed: {}. Refine the proof of concept or pursue \
                         another path.",
                        verdict.explanation
                    ));
                }
            }
        };
        persist_transcript(&ctx, env.run_dir);
        result
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Validate a candidate by concrete execution.
///
/// In ctf mode validation is mechanical: the artifact runs in the job
/// container and the flag oracle is applied to everything it printed. In
/// whitebox mode a validation agent executes (and may refine, up to the
/// configured rounds) the candidate, and passes only with concrete
/// evidence. Container errors yield fail verdicts, never exceptions.
pub fn validate_poc(candidate: &PocArtifact, env: &AgentEnv<'_>) -> Verdict {
    if let Err(err) = candidate.validate() {
        return Verdict::fail(Vec::new(), format!("malformed candidate: {err}"));
    }
    match env.job.mode {
        JobMode::Ctf => validate_mechanical(candidate, env),
        JobMode::Whitebox => validate_with_agent(candidate, env),
    }
}

fn artifact_commands(candidate: &PocArtifact) -> Vec<String> {
    match candidate.kind {
        PocKind::HttpSequence => candidate
            .body
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(str::to_string)
            .collect(),
        PocKind::Payload => vec![candidate.body.clone()],
        PocKind::Script => Vec::new(),
    }
}

fn validate_mechanical(candidate: &PocArtifact, env: &AgentEnv<'_>) -> Verdict {
    let OracleSpec::FlagPattern { pattern } = &candidate.expected_oracle else {
        return Verdict::fail(
            Vec::new(),
            "ctf validation reduces to flag extraction; a flag_pattern oracle is required",
        );
    };
    let regex = match regex::Regex::new(pattern) {
        Ok(regex) => regex,
        Err(err) => return Verdict::fail(Vec::new(), format!("invalid flag pattern: {err}")),
    };

    let mut transcript = String::new();
    let mut captured: Option<String> = None;
    let mut record = |label: &str, result: &crate::sandbox::ExecResult| {
        transcript.push_str(&format!(
            "$ {label}\nexit_code: {}\n{}{}\n",
            result.exit_code,
            result.stdout,
            if result.stderr.is_empty() {
                String::new()
            } else {
                format!("[stderr]\n{}", result.stderr)
            }
        ));
    };

    if candidate.kind == PocKind::Script {
        match env.sandbox.exec_script(env.handle, &candidate.body, None) {
            Ok(result) => {
                record("<script>", &result);
                captured = crate::bench::extract_flag(
                    &format!("{}\n{}", result.stdout, result.stderr),
                    &regex,
                );
            }
            Err(err) => {
                return Verdict::fail(
                    vec![EvidenceItem::new(
                        EvidenceKind::CommandTranscript,
                        format!("{transcript}\nerror: {err}"),
                        env.clock.now_ms(),
                    )],
                    format!("execution error: {err}"),
                )
            }
        }
    } else {
        for command in artifact_commands(candidate) {
            match env.sandbox.exec_command(env.handle, &command, None) {
                Ok(result) => {
                    record(&command, &result);
                    if captured.is_none() {
                        captured = crate::bench::extract_flag(
                            &format!("{}\n{}", result.stdout, result.stderr),
                            &regex,
                        );
                    }
                }
                Err(err) => {
                    return Verdict::fail(
                        vec![EvidenceItem::new(
                            EvidenceKind::CommandTranscript,
                            format!("{transcript}\nerror: {err}"),
                            env.clock.now_ms(),
                        )],
                        format!("execution error: {err}"),
                    )
                }
            }
        }
    }

    let now = env.clock.now_ms();
    let transcript_evidence =
        EvidenceItem::new(EvidenceKind::CommandTranscript, transcript.clone(), now);
    match captured {
        Some(flag) => Verdict::pass(
            vec![
                EvidenceItem::new(EvidenceKind::CapturedFlag, flag, now),
                transcript_evidence,
            ],
            "flag pattern matched captured output",
        )
        .expect("evidence provided"),
        None => Verdict::fail(
            vec![transcript_evidence],
            "no flag pattern match in captured output",
        ),
    }
}

fn validate_with_agent(candidate: &PocArtifact, env: &AgentEnv<'_>) -> Verdict {
    let mut artifact = candidate.clone();
    let max_extra_rounds = env.config.validation_refinement_rounds;
    let mut round = 0u32;
    loop {
        round += 1;
        let mut ctx = AgentContext::new(
            format!("validation-{round}"),
            AgentRole::Validation,
            env.job.id.clone(),
            validation_prompt(env.prompts, env.job, &artifact),
            registry_for(AgentRole::Validation, env.job.mode),
        );
        ctx.push_user("Execute the candidate, check the oracle, and report your verdict.");

        let outcome = run_agent_loop(
            &mut ctx,
            env,
            &env.job.budgets,
            env.config.max_delegate_steps,
        );
        persist_transcript(&ctx, env.run_dir);

        let text = match outcome {
            Ok(AgentOutcome::FinalText(text)) => text,
            Ok(AgentOutcome::Candidate { message, .. }) => message,
            Ok(AgentOutcome::BudgetStop { reason, .. }) => {
                return Verdict::fail(
                    Vec::new(),
                    format!(
                        "budget stop ({}) during validation round {round}",
                        reason.label()
                    ),
                )
            }
            Err(err) => {
                return Verdict::fail(Vec::new(), format!("validation agent failed: {err}"))
            }
        };

        let Some(Ok(block)) = parse_verdict_block(&text) else {
            return Verdict::fail(
                Vec::new(),
                format!("validation agent returned no verdict block in round {round}"),
            );
        };
        let now = env.clock.now_ms();
        let evidence: Vec<EvidenceItem> = block
            .evidence
            .iter()
            .map(|e| EvidenceItem::new(e.kind, e.content.clone(), now))
            .collect();

        if block.outcome == "pass" {
            return match Verdict::pass(
                evidence,
                format!("{} (validation round {round})", block.explanation),
            ) {
                Ok(verdict) => verdict,
                Err(DomainError::Invalid(_)) => Verdict::fail(
                    Vec::new(),
                    format!("pass verdict without evidence in round {round}"),
                ),
                Err(other) => Verdict::fail(Vec::new(), other.to_string()),
            };
        }

        // Failing verdict: take up one refinement round if the agent
        // proposed a refined artifact.
        if round <= max_extra_rounds {
            if let Some(Ok(refined)) = parse_poc_block(&text) {
                artifact = refined.artifact();
                continue;
            }
        }
        return Verdict::fail(
            evidence,
            format!("{} (after {round} validation round(s))", block.explanation),
        );
    }
}
