//! Shared vocabulary: jobs, findings, evidence, and verdicts.
//!
//! Domain values are immutable after construction; state changes produce new
//! values, so they are safe to share read-only across concurrent agents.

use serde::{Deserialize, Serialize};

use crate::accounting::StopPolicy;
use crate::clock::TimestampMs;

pub use crate::accounting::StopReason;

/// Budget caps attached to a job.
pub type BudgetPolicy = StopPolicy;

// ---------------------------------------------------------------------------
// Jobs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobMode {
    /// Blackbox run graded by flag extraction; the coordinator operates alone.
    Ctf,
    /// Full three-role run against a locally deployed target with source access.
    Whitebox,
}

impl std::fmt::Display for JobMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JobMode::Ctf => "ctf",
            JobMode::Whitebox => "whitebox",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Created,
    Running,
    Validated,
    Exhausted,
    Failed,
    TornDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobEvent {
    Start,
    Validate,
    Exhaust,
    Fail,
    Teardown,
}

/// What the agents are pointed at.
///
/// `withheld_metadata` carries grading labels (e.g. the vulnerability
/// category) that must never reach an agent prompt; transcript scans assert
/// this.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetDescriptor {
    pub url: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_path: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub withheld_metadata: Vec<String>,
}

impl TargetDescriptor {
    pub fn validate(&self, mode: JobMode) -> Result<(), DomainError> {
        if mode == JobMode::Ctf && self.source_path.is_some() {
            return Err(DomainError::Invalid(
                "source_path is not allowed in ctf mode".into(),
            ));
        }
        Ok(())
    }
}

/// One assessment of one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub mode: JobMode,
    pub target: TargetDescriptor,
    pub budgets: BudgetPolicy,
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<TimestampMs>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ended_at: Option<TimestampMs>,
}

impl Job {
    pub fn new(
        id: impl Into<String>,
        mode: JobMode,
        target: TargetDescriptor,
        budgets: BudgetPolicy,
    ) -> Result<Self, DomainError> {
        target.validate(mode)?;
        Ok(Self {
            id: id.into(),
            mode,
            target,
            budgets,
            state: JobState::Created,
            started_at: None,
            ended_at: None,
        })
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self.state,
            JobState::Validated | JobState::Exhausted | JobState::Failed | JobState::TornDown
        )
    }
}

/// Apply one lifecycle event.
///
/// Legal edges: created →(start)→ running →(validate|exhaust|fail)→
/// {validated,exhausted,failed} →(teardown)→ torn_down. Everything else is an
/// [`DomainError::IllegalTransition`]. `ended_at` is clamped to never precede
/// `started_at`.
pub fn transition(job: &Job, event: JobEvent, now_ms: TimestampMs) -> Result<Job, DomainError> {
    use JobEvent::*;
    use JobState::*;
    let next = match (job.state, event) {
        (Created, Start) => Running,
        (Running, Validate) => Validated,
        (Running, Exhaust) => Exhausted,
        (Running, Fail) => Failed,
        (Validated, Teardown) | (Exhausted, Teardown) | (Failed, Teardown) => TornDown,
        (state, event) => return Err(DomainError::IllegalTransition { state, event }),
    };
    let mut out = job.clone();
    out.state = next;
    match next {
        Running => out.started_at = Some(now_ms),
        Validated | Exhausted | Failed => {
            out.ended_at = Some(now_ms.max(job.started_at.unwrap_or(now_ms)));
        }
        _ => {}
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

/// The 13 benchmark vulnerability categories plus `other`, which absorbs any
/// unmapped label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnCategory {
    Xss,
    BrokenAuthorization,
    Ssti,
    CommandInjection,
    SqlInjection,
    BlindSqlInjection,
    BrokenAuthentication,
    Ssrf,
    Misconfiguration,
    SensitiveDataExposure,
    CryptographicFailure,
    PathTraversal,
    #[serde(other)]
    Other,
}

impl VulnCategory {
    pub const ALL: [VulnCategory; 13] = [
        VulnCategory::Xss,
        VulnCategory::BrokenAuthorization,
        VulnCategory::Ssti,
        VulnCategory::CommandInjection,
        VulnCategory::SqlInjection,
        VulnCategory::BlindSqlInjection,
        VulnCategory::BrokenAuthentication,
        VulnCategory::Ssrf,
        VulnCategory::Misconfiguration,
        VulnCategory::SensitiveDataExposure,
        VulnCategory::CryptographicFailure,
        VulnCategory::PathTraversal,
        VulnCategory::Other,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            VulnCategory::Xss => "xss",
            VulnCategory::BrokenAuthorization => "broken_authorization",
            VulnCategory::Ssti => "ssti",
            VulnCategory::CommandInjection => "command_injection",
            VulnCategory::SqlInjection => "sql_injection",
            VulnCategory::BlindSqlInjection => "blind_sql_injection",
            VulnCategory::BrokenAuthentication => "broken_authentication",
            VulnCategory::Ssrf => "ssrf",
            VulnCategory::Misconfiguration => "misconfiguration",
            VulnCategory::SensitiveDataExposure => "sensitive_data_exposure",
            VulnCategory::CryptographicFailure => "cryptographic_failure",
            VulnCategory::PathTraversal => "path_traversal",
            VulnCategory::Other => "other",
        }
    }

    /// Unmapped labels fold into `Other`.
    pub fn from_label(label: &str) -> Self {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == label)
            .unwrap_or(VulnCategory::Other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Critical,
    High,
    Medium,
    Low,
    Info,
}

/// Oracle attached to a proof-of-concept artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    /// Grading by regex over captured output.
    FlagPattern { pattern: String },
    /// Grading by observable side effect, checked per the instructions.
    SideEffect { check_instructions: String },
}

impl OracleSpec {
    pub fn validate(&self) -> Result<(), DomainError> {
        match self {
            OracleSpec::FlagPattern { pattern } if pattern.is_empty() => Err(DomainError::Invalid(
                "flag_pattern oracle without pattern".into(),
            )),
            OracleSpec::SideEffect { check_instructions } if check_instructions.is_empty() => Err(
                DomainError::Invalid("side_effect oracle without check instructions".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PocKind {
    HttpSequence,
    Payload,
    Script,
}

/// A minimal proof-of-concept: an HTTP request sequence, a payload, or a
/// script, plus the oracle that decides whether executing it demonstrates
/// the vulnerability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocArtifact {
    pub kind: PocKind,
    pub body: String,
    pub expected_oracle: OracleSpec,
}

impl PocArtifact {
    pub fn validate(&self) -> Result<(), DomainError> {
        if self.body.trim().is_empty() {
            return Err(DomainError::Invalid("PoC body is empty".into()));
        }
        self.expected_oracle.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceKind {
    CapturedFlag,
    CommandTranscript,
    HttpExchange,
    FileArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub kind: EvidenceKind,
    pub content: String,
    pub timestamp_ms: TimestampMs,
}

impl EvidenceItem {
    pub fn new(kind: EvidenceKind, content: impl Into<String>, timestamp_ms: TimestampMs) -> Self {
        Self {
            kind,
            content: content.into(),
            timestamp_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    Pass,
    Fail,
}

/// Result of validating a candidate PoC. A pass carries at least one
/// evidence item by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: VerdictOutcome,
    pub evidence: Vec<EvidenceItem>,
    pub explanation: String,
}

impl Verdict {
    pub fn pass(
        evidence: Vec<EvidenceItem>,
        explanation: impl Into<String>,
    ) -> Result<Self, DomainError> {
        if evidence.is_empty() {
            return Err(DomainError::Invalid(
                "pass verdict requires evidence".into(),
            ));
        }
        Ok(Self {
            outcome: VerdictOutcome::Pass,
            evidence,
            explanation: explanation.into(),
        })
    }

    pub fn fail(evidence: Vec<EvidenceItem>, explanation: impl Into<String>) -> Self {
        Self {
            outcome: VerdictOutcome::Fail,
            evidence,
            explanation: explanation.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == VerdictOutcome::Pass
    }
}

/// A validated vulnerability. Constructible only from a pass verdict:
/// candidates that failed validation never become findings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub title: String,
    pub category: VulnCategory,
    pub severity: Severity,
    pub poc: PocArtifact,
    pub verdict: Verdict,
    pub evidence: Vec<EvidenceItem>,
}

impl Finding {
    pub fn from_validated(
        id: impl Into<String>,
        title: impl Into<String>,
        category: VulnCategory,
        severity: Severity,
        poc: PocArtifact,
        verdict: Verdict,
    ) -> Result<Self, DomainError> {
        if !verdict.passed() {
            return Err(DomainError::UnvalidatedFinding);
        }
        poc.validate()?;
        let evidence = verdict.evidence.clone();
        Ok(Self {
            id: id.into(),
            title: title.into(),
            category,
            severity,
            poc,
            verdict,
            evidence,
        })
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, thiserror::Error)]
pub enum DomainError {
    #[error("illegal transition: {event:?} from {state:?}")]
    IllegalTransition { state: JobState, event: JobEvent },
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("a finding may only be reported with a pass verdict")]
    UnvalidatedFinding,
}
