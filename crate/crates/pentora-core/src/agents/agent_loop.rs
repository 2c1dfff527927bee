//! The LLM-driven agent loop and the tool dispatch layer.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::accounting::{should_stop, StopDecision, StopPolicy, StopReason, UsageTracker};
use crate::clock::Clock;
use crate::config::RunConfig;
use crate::domain::{Job, Severity};
use crate::gateway::{
    truncate_for_overflow, ChatMessage, Provider, ProviderError, ProviderParams, ToolCall,
    ToolSchema,
};
use crate::reporting::{send_alert, AlertKind, AlertMessage, MailBackend};
use crate::sandbox::{ContainerHandle, ExecResult, SandboxManager};
use crate::store::RunDir;

use super::prompts::{sandbox_prompt, PromptSet};
use super::{
    parse_poc_block, registry_for, AgentContext, AgentError, AgentRole, ControllerState, PocBlock,
    GATE_PROBE_SUCCESS,
};

/// Everything an agent loop needs, shared by all agents of one job.
pub struct AgentEnv<'a> {
    pub job: &'a Job,
    pub sandbox: &'a SandboxManager,
    pub handle: &'a ContainerHandle,
    pub tracker: &'a UsageTracker,
    pub provider: &'a dyn Provider,
    pub params: &'a ProviderParams,
    pub config: &'a RunConfig,
    pub prompts: &'a PromptSet,
    pub mailbox: &'a dyn MailBackend,
    pub clock: &'a dyn Clock,
    pub run_dir: Option<&'a RunDir>,
    pub state: &'a Mutex<ControllerState>,
    pub agent_seq: &'a AtomicU32,
}

/// Normalized observation for one dispatched tool call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolResult {
    pub call_id: String,
    pub name: String,
    pub content: String,
    pub is_error: bool,
    pub latency_ms: u64,
}

#[derive(Debug)]
pub enum AgentOutcome {
    FinalText(String),
    /// The agent emitted a structured PoC block; the accompanying message is
    /// kept for the transcript.
    Candidate {
        block: PocBlock,
        message: String,
    },
    BudgetStop {
        reason: StopReason,
        partial: String,
    },
}

fn complete_with_retry(
    ctx: &mut AgentContext,
    env: &AgentEnv<'_>,
) -> Result<crate::gateway::ProviderResponse, AgentError> {
    let mut retried = false;
    let mut overflow_truncations = 0u32;
    loop {
        match env
            .provider
            .complete(&ctx.transcript, &ctx.tool_registry, env.params)
        {
            Ok(response) => return Ok(response),
            Err(ProviderError::ContextOverflow) if overflow_truncations < 2 => {
                overflow_truncations += 1;
                ctx.transcript = truncate_for_overflow(&ctx.transcript);
            }
            Err(err) if err.is_retryable() && !retried => {
                retried = true;
                tracing::warn!(agent = %ctx.agent_id, error = %err, "provider error, retrying once");
            }
            Err(err) => return Err(AgentError::Provider(err)),
        }
    }
}

/// Drive one agent until final text, a PoC candidate, or a budget stop.
///
/// Tool calls within one assistant message run sequentially in message
/// order; every tool call and token usage lands in the tracker; tool
/// failures become observations, never aborts. The loop exits within one
/// dispatch of any breached budget threshold.
pub fn run_agent_loop(
    ctx: &mut AgentContext,
    env: &AgentEnv<'_>,
    policy: &StopPolicy,
    max_steps: u32,
) -> Result<AgentOutcome, AgentError> {
    debug_assert!(matches!(
        ctx.transcript.first().map(|m| m.role),
        Some(crate::gateway::Role::System)
    ));
    let mut last_text = String::new();
    loop {
        if let StopDecision::Stop(reason) = should_stop(
            &env.tracker.snapshot(),
            policy,
            &env.config.cost_model,
            false,
        ) {
            return Ok(AgentOutcome::BudgetStop {
                reason,
                partial: last_text,
            });
        }
        if ctx.step_count >= max_steps {
            return Ok(AgentOutcome::BudgetStop {
                reason: StopReason::StepLimit,
                partial: last_text,
            });
        }

        let response = complete_with_retry(ctx, env)?;
        env.tracker.record_llm(&response.usage);
        ctx.step_count += 1;
        let message = response.message;
        ctx.transcript.push(message.clone());
        if !message.content.is_empty() {
            last_text = message.content.clone();
        }

        // Controller-owned phase signal: a parseable poc fence ends the loop.
        match parse_poc_block(&message.content) {
            Some(Ok(block)) => {
                return Ok(AgentOutcome::Candidate {
                    block,
                    message: message.content,
                });
            }
            Some(Err(problem)) => {
                ctx.push_user(format!(
                    "The proof-of-concept block could not be used: {problem}. \
                     Emit a corrected ```poc block or continue investigating."
                ));
                continue;
            }
            None => {}
        }

        if message.tool_calls.is_empty() {
            return Ok(AgentOutcome::FinalText(message.content));
        }

        for call in &message.tool_calls {
            // Budget check precedes every dispatch, so the loop exits within
            // one dispatch of any breached threshold (and remaining calls of
            // this message are abandoned).
            if let StopDecision::Stop(reason) = should_stop(
                &env.tracker.snapshot(),
                policy,
                &env.config.cost_model,
                false,
            ) {
                return Ok(AgentOutcome::BudgetStop {
                    reason,
                    partial: last_text,
                });
            }
            let observation = match dispatch_tool(call, &ctx.tool_registry, env) {
                Ok(result) => result,
                Err(AgentError::UnknownTool(name)) => ToolResult {
                    call_id: call.id.clone(),
                    name: name.clone(),
                    content: format!(
                        "error: unknown tool {name:?}; available tools: {}",
                        ctx.tool_registry
                            .iter()
                            .map(|t| t.name.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                    is_error: true,
                    latency_ms: 0,
                },
                Err(other) => ToolResult {
                    call_id: call.id.clone(),
                    name: call.name.clone(),
                    content: format!("error: {other}"),
                    is_error: true,
                    latency_ms: 0,
                },
            };
            ctx.transcript.push(ChatMessage::tool(
                &observation.call_id,
                &observation.content,
            ));
        }
    }
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn format_exec(result: &ExecResult) -> String {
    let mut out = format!(
        "exit_code: {}{}\nstdout:\n{}",
        result.exit_code,
        if result.timed_out { " (timed out)" } else { "" },
        result.stdout
    );
    if !result.stderr.is_empty() {
        out.push_str("\nstderr:\n");
        out.push_str(&result.stderr);
    }
    if result.truncated {
        out.push_str("\n[output truncated]");
    }
    out
}

fn missing_arg(call: &ToolCall, arg: &str) -> ToolResult {
    ToolResult {
        call_id: call.id.clone(),
        name: call.name.clone(),
        content: format!("error: tool {} requires argument {arg:?}", call.name),
        is_error: true,
        latency_ms: 0,
    }
}

fn note_probe_success(env: &AgentEnv<'_>, evidence_ref: &str) {
    let mut state = env.state.lock().unwrap();
    if let Some(gate) = state.gate_mut(GATE_PROBE_SUCCESS) {
        if gate.satisfy(evidence_ref, env.clock.now_ms()) {
            env.tracker.note_progress();
        }
    }
}

/// Route one tool call to the sandbox, a sub-agent, or a reporting client.
///
/// Only names in the caller's registry are dispatched; anything else is an
/// [`AgentError::UnknownTool`] that the loop feeds back as an observation.
/// Downstream failures are embedded in the result as failure text.
pub fn dispatch_tool(
    call: &ToolCall,
    registry: &[ToolSchema],
    env: &AgentEnv<'_>,
) -> Result<ToolResult, AgentError> {
    if !registry.iter().any(|t| t.name == call.name) {
        return Err(AgentError::UnknownTool(call.name.clone()));
    }
    let started = Instant::now();
    let mut is_error = false;
    let content = match call.name.as_str() {
        "run_command" => {
            let Some(command) = call.text_arg("command") else {
                return Ok(missing_arg(call, "command"));
            };
            env.tracker.record_command(&command);
            match env.sandbox.exec_command(env.handle, &command, None) {
                Ok(result) => {
                    if result.exit_code == 0 {
                        note_probe_success(env, &call.id);
                    }
                    format_exec(&result)
                }
                Err(err) => {
                    is_error = true;
                    format!("error: {err}")
                }
            }
        }
        "run_python" => {
            let Some(code) = call.text_arg("code").or_else(|| call.text_arg("source")) else {
                return Ok(missing_arg(call, "code"));
            };
            match env.sandbox.exec_script(env.handle, &code, None) {
                Ok(result) => {
                    if result.exit_code == 0 {
                        note_probe_success(env, &call.id);
                    }
                    format_exec(&result)
                }
                Err(err) => {
                    is_error = true;
                    format!("error: {err}")
                }
            }
        }
        "sandbox_agent" => {
            let Some(task) = call.text_arg("task") else {
                return Ok(missing_arg(call, "task"));
            };
            let (summary, truncated) = spawn_sandbox_agent(&task, env);
            if truncated {
                format!("{summary}\n[sub-agent summary truncated: budget stop]")
            } else {
                summary
            }
        }
        "get_registered_emails" => match env.mailbox.registered_emails() {
            Ok(accounts) => format!("registered accounts:\n{}", accounts.join("\n")),
            Err(err) => {
                is_error = true;
                format!("error: {err}")
            }
        },
        "list_account_messages" => {
            let Some(account) = call.text_arg("account") else {
                return Ok(missing_arg(call, "account"));
            };
            match env.mailbox.list_messages(&account) {
                Ok(messages) => {
                    let mut out = format!("{} message(s):\n", messages.len());
                    for msg in messages {
                        out.push_str(&format!(
                            "- id={} from={} subject={}\n",
                            msg.id, msg.from, msg.subject
                        ));
                    }
                    out
                }
                Err(err) => {
                    is_error = true;
                    format!("error: {err}")
                }
            }
        }
        "get_message_by_id" => {
            let Some(account) = call.text_arg("account") else {
                return Ok(missing_arg(call, "account"));
            };
            let Some(id) = call.text_arg("id") else {
                return Ok(missing_arg(call, "id"));
            };
            match env.mailbox.message_by_id(&account, &id) {
                Ok(msg) => format!(
                    "from: {}\nto: {}\nsubject: {}\n\n{}",
                    msg.from, msg.to, msg.subject, msg.body
                ),
                Err(err) => {
                    // Not-found is an observation for the agent, not a fault.
                    format!("not found: {err}")
                }
            }
        }
        "send_slack_alert" | "send_slack_summary" => {
            let Some(title) = call.text_arg("title") else {
                return Ok(missing_arg(call, "title"));
            };
            let body = call.text_arg("body").unwrap_or_default();
            let severity = call
                .text_arg("severity")
                .and_then(|s| serde_json::from_value(serde_json::Value::String(s)).ok())
                .unwrap_or(Severity::Medium);
            let kind = if call.name == "send_slack_alert" {
                AlertKind::Alert
            } else {
                AlertKind::Summary
            };
            let msg = AlertMessage::new(kind, title, body, env.job.id.clone(), severity);
            let receipt = send_alert(&msg, env.config.webhook_url.as_deref());
            format!(
                "delivery: {:?} after {} attempt(s)",
                receipt.status, receipt.attempts
            )
        }
        other => return Err(AgentError::UnknownTool(other.to_string())),
    };
    let latency = started.elapsed();
    env.tracker.record_tool(&call.name, latency);
    Ok(ToolResult {
        call_id: call.id.clone(),
        name: call.name.clone(),
        content,
        is_error,
        latency_ms: latency.as_millis() as u64,
    })
}

// ---------------------------------------------------------------------------
// Sandbox delegation
// ---------------------------------------------------------------------------

/// Run one delegated sub-task in a fresh sandbox agent context.
///
/// The sub-agent sees only its role prompt and the task string, shares the
/// job container and tracker, and its final text is returned to the
/// coordinator as a single observation. A budget stop yields a partial
/// summary flagged as truncated.
pub fn spawn_sandbox_agent(task: &str, env: &AgentEnv<'_>) -> (String, bool) {
    if !env.handle.alive() {
        return ("error: job container is not alive".into(), false);
    }
    let seq = env.agent_seq.fetch_add(1, Ordering::SeqCst) + 1;
    let mut ctx = AgentContext::new(
        format!("sandbox-{seq}"),
        AgentRole::Sandbox,
        env.job.id.clone(),
        sandbox_prompt(env.prompts, env.job),
        registry_for(AgentRole::Sandbox, env.job.mode),
    );
    ctx.push_user(task);

    let outcome = run_agent_loop(
        &mut ctx,
        env,
        &env.job.budgets,
        env.config.max_delegate_steps,
    );
    persist_transcript(&ctx, env.run_dir);
    match outcome {
        Ok(AgentOutcome::FinalText(summary)) => (summary, false),
        Ok(AgentOutcome::Candidate { message, .. }) => (message, false),
        Ok(AgentOutcome::BudgetStop { partial, reason }) => (
            if partial.is_empty() {
                format!("(no summary before {} stop)", reason.label())
            } else {
                partial
            },
            true,
        ),
        Err(err) => (format!("error: sub-agent failed: {err}"), false),
    }
}

pub(crate) fn persist_transcript(ctx: &AgentContext, run_dir: Option<&RunDir>) {
    let Some(run_dir) = run_dir else { return };
    let lines: Vec<String> = ctx
        .transcript
        .iter()
        .filter_map(|msg| serde_json::to_string(msg).ok())
        .collect();
    let rel = format!("transcripts/{}.jsonl", ctx.agent_id);
    if let Err(err) = run_dir.write_text(&rel, &(lines.join("\n") + "\n")) {
        tracing::warn!(agent = %ctx.agent_id, error = %err, "failed to persist transcript");
    }
}
