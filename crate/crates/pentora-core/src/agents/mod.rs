//! The three agent roles and the evidence-gated job controller.
//!
//! A coordinator agent plans and orchestrates; sandbox agents execute
//! tactical sub-tasks in fresh LLM contexts against the same per-job
//! container; a validation step turns candidate proofs of concept into
//! pass/fail verdicts with concrete evidence. The controller in
//! [`controller`] sequences hypothesis, dispatch, assembly, and validation
//! with a bounded global retry loop.

pub mod agent_loop;
pub mod controller;
pub mod prompts;

use serde::{Deserialize, Serialize};

use crate::clock::TimestampMs;
use crate::domain::{JobMode, OracleSpec, PocArtifact, PocKind, Severity, VulnCategory};
use crate::gateway::{ChatMessage, ParamKind, ToolSchema};

pub use agent_loop::{dispatch_tool, run_agent_loop, spawn_sandbox_agent, AgentEnv, ToolResult};
pub use controller::{run_job, validate_poc, JobReport, JobRunner};

// ---------------------------------------------------------------------------
// Roles and contexts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Coordinator,
    Sandbox,
    Validation,
}

impl AgentRole {
    pub fn label(&self) -> &'static str {
        match self {
            AgentRole::Coordinator => "coordinator",
            AgentRole::Sandbox => "sandbox",
            AgentRole::Validation => "validation",
        }
    }
}

/// One agent's conversation: transcript, bounded action space, step count.
///
/// Sandbox and validation contexts start fresh; the only coordinator text
/// that may reach them is the delegated task string.
#[derive(Debug, Clone)]
pub struct AgentContext {
    pub agent_id: String,
    pub role: AgentRole,
    pub job_id: String,
    pub transcript: Vec<ChatMessage>,
    pub tool_registry: Vec<ToolSchema>,
    pub step_count: u32,
}

impl AgentContext {
    pub fn new(
        agent_id: impl Into<String>,
        role: AgentRole,
        job_id: impl Into<String>,
        system_prompt: String,
        tool_registry: Vec<ToolSchema>,
    ) -> Self {
        Self {
            agent_id: agent_id.into(),
            role,
            job_id: job_id.into(),
            transcript: vec![ChatMessage::system(system_prompt)],
            tool_registry,
            step_count: 0,
        }
    }

    pub fn push_user(&mut self, content: impl Into<String>) {
        self.transcript.push(ChatMessage::user(content));
    }

    pub fn knows_tool(&self, name: &str) -> bool {
        self.tool_registry.iter().any(|t| t.name == name)
    }
}

/// Per-role tool registries. The coordinator owns the full 8-tool surface;
/// in ctf mode it operates alone, so delegation is removed from its action
/// space. Sandbox and validation agents get the 2-tool execution surface.
pub fn registry_for(role: AgentRole, mode: JobMode) -> Vec<ToolSchema> {
    let run_command = ToolSchema::new(
        "run_command",
        "Run a shell command inside the job container.",
    )
    .param("command", ParamKind::Text, true);
    let run_python = ToolSchema::new(
        "run_python",
        "Run a Python script inside the job container.",
    )
    .param("code", ParamKind::Text, true);
    match role {
        AgentRole::Sandbox | AgentRole::Validation => vec![run_command, run_python],
        AgentRole::Coordinator => {
            let mut tools = Vec::new();
            if mode == JobMode::Whitebox {
                tools.push(
                    ToolSchema::new(
                        "sandbox_agent",
                        "Delegate a focused sub-task to a sandbox agent sharing this job's container.",
                    )
                    .param("task", ParamKind::Text, true),
                );
            }
            tools.push(run_command);
            tools.push(run_python);
            tools.push(ToolSchema::new(
                "get_registered_emails",
                "List mailbox accounts registered for this engagement.",
            ));
            tools.push(
                ToolSchema::new(
                    "list_account_messages",
                    "List messages in a mailbox account.",
                )
                .param("account", ParamKind::Text, true),
            );
            tools.push(
                ToolSchema::new("get_message_by_id", "Fetch one mail message body.")
                    .param("account", ParamKind::Text, true)
                    .param("id", ParamKind::Text, true),
            );
            tools.push(
                ToolSchema::new("send_slack_alert", "Send an alert to the operator webhook.")
                    .param("title", ParamKind::Text, true)
                    .param("body", ParamKind::Text, true)
                    .param("severity", ParamKind::Text, false),
            );
            tools.push(
                ToolSchema::new(
                    "send_slack_summary",
                    "Send a run summary to the operator webhook.",
                )
                .param("title", ParamKind::Text, true)
                .param("body", ParamKind::Text, true),
            );
            tools
        }
    }
}

// ---------------------------------------------------------------------------
// Controller state
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Hypothesis,
    Dispatch,
    Assembly,
    Validation,
    Done,
}

/// A precondition for advancing the controller, satisfied only by recorded
/// evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatePredicate {
    pub description: String,
    pub satisfied: bool,
    pub evidence_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfied_at_ms: Option<TimestampMs>,
}

impl GatePredicate {
    pub fn new(description: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            satisfied: false,
            evidence_refs: Vec::new(),
            satisfied_at_ms: None,
        }
    }

    /// Flip to satisfied; requires an evidence reference. Returns true if
    /// this call newly satisfied the gate.
    pub fn satisfy(&mut self, evidence_ref: impl Into<String>, now_ms: TimestampMs) -> bool {
        self.evidence_refs.push(evidence_ref.into());
        if self.satisfied {
            return false;
        }
        self.satisfied = true;
        self.satisfied_at_ms = Some(now_ms);
        true
    }
}

pub const GATE_PROBE_SUCCESS: &str = "successful probe observation recorded";
pub const GATE_CANDIDATE: &str = "candidate proof of concept assembled";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerState {
    pub phase: Phase,
    pub attempts: u32,
    pub gates: Vec<GatePredicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<PocArtifact>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self {
            phase: Phase::Hypothesis,
            attempts: 0,
            gates: vec![
                GatePredicate::new(GATE_PROBE_SUCCESS),
                GatePredicate::new(GATE_CANDIDATE),
            ],
            candidate: None,
        }
    }

    pub fn gate_mut(&mut self, description: &str) -> Option<&mut GatePredicate> {
        self.gates.iter_mut().find(|g| g.description == description)
    }

    /// Assembly is reachable only once probing has produced evidence.
    pub fn assembly_gates_satisfied(&self) -> bool {
        self.gates
            .iter()
            .filter(|g| g.description == GATE_PROBE_SUCCESS)
            .all(|g| g.satisfied)
    }
}

impl Default for ControllerState {
    fn default() -> Self {
        Self::new()
    }
}

// ---------------------------------------------------------------------------
// Sentinel blocks
// ---------------------------------------------------------------------------

/// Candidate PoC as emitted by the coordinator inside a ```poc fence.
#[derive(Debug, Clone, Deserialize)]
pub struct PocBlock {
    pub kind: PocKind,
    pub body: String,
    #[serde(alias = "expected_oracle")]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub category: Option<VulnCategory>,
    #[serde(default)]
    pub severity: Option<Severity>,
}

impl PocBlock {
    pub fn artifact(&self) -> PocArtifact {
        PocArtifact {
            kind: self.kind,
            body: self.body.clone(),
            expected_oracle: self.oracle.clone(),
        }
    }
}

/// Verdict as emitted by the validation agent inside a ```verdict fence.
#[derive(Debug, Clone, Deserialize)]
pub struct VerdictBlock {
    pub outcome: String,
    #[serde(default)]
    pub explanation: String,
    #[serde(default)]
    pub evidence: Vec<VerdictEvidence>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct VerdictEvidence {
    pub kind: crate::domain::EvidenceKind,
    pub content: String,
}

/// Extract the body of the first ```tag fenced block, if any.
pub fn extract_fenced<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let opener = format!("```{tag}");
    let start = text.find(&opener)?;
    let after_opener = &text[start + opener.len()..];
    let body_start = after_opener.find('\n')? + 1;
    let body = &after_opener[body_start..];
    let end = body.find("```")?;
    Some(body[..end].trim())
}

/// Phase detection is controller-owned: assembly begins when the message
/// carries a parseable ```poc block. `None` means no block; `Some(Err)`
/// means a block that could not be parsed (fed back as an observation).
pub fn parse_poc_block(text: &str) -> Option<Result<PocBlock, String>> {
    let body = extract_fenced(text, "poc")?;
    let parsed = serde_json::from_str::<PocBlock>(body)
        .map_err(|e| format!("unparseable poc block: {e}"))
        .and_then(|block| {
            block
                .artifact()
                .validate()
                .map_err(|e| format!("invalid poc block: {e}"))?;
            Ok(block)
        });
    Some(parsed)
}

pub fn parse_verdict_block(text: &str) -> Option<Result<VerdictBlock, String>> {
    let body = extract_fenced(text, "verdict")?;
    Some(
        serde_json::from_str::<VerdictBlock>(body)
            .map_err(|e| format!("unparseable verdict block: {e}")),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("provider error: {0}")]
    Provider(#[from] crate::gateway::ProviderError),
    #[error("sandbox error: {0}")]
    Sandbox(#[from] crate::sandbox::SandboxError),
    #[error("unknown tool: {0}")]
    UnknownTool(String),
    #[error("domain error: {0}")]
    Domain(#[from] crate::domain::DomainError),
    #[error("io error: {0}")]
    Io(String),
}
