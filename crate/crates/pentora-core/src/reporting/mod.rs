//! Alerting and mail-workflow clients behind the coordinator's auxiliary
//! tools, plus report synthesis.
//!
//! Reporting never blocks or fails a job: webhook delivery degrades to a
//! logged receipt, mail-backend failures become error observations for the
//! agent, and report writing surfaces plain IO errors to the controller.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::accounting::{StopReason, UsageRecord};
use crate::clock::TimestampMs;
use crate::domain::{Finding, Job, Severity};
use crate::store::RunDir;

#[derive(Debug, thiserror::Error)]
pub enum ReportingError {
    #[error("mail backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("delivery failed: {0}")]
    DeliveryFailed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Alerts
// ---------------------------------------------------------------------------

const MAX_ALERT_BODY: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    Alert,
    Summary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlertMessage {
    pub kind: AlertKind,
    pub title: String,
    pub body: String,
    pub job_ref: String,
    pub severity: Severity,
}

impl AlertMessage {
    /// Bodies are clipped to the webhook-safe 4000-character limit.
    pub fn new(
        kind: AlertKind,
        title: impl Into<String>,
        body: impl Into<String>,
        job_ref: impl Into<String>,
        severity: Severity,
    ) -> Self {
        let mut body: String = body.into();
        if body.chars().count() > MAX_ALERT_BODY {
            body = body.chars().take(MAX_ALERT_BODY - 1).collect::<String>() + "…";
        }
        Self {
            kind,
            title: title.into(),
            body,
            job_ref: job_ref.into(),
            severity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStatus {
    Delivered(u16),
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeliveryReceipt {
    pub status: DeliveryStatus,
    pub attempts: u32,
}

impl DeliveryReceipt {
    pub fn delivered(&self) -> bool {
        matches!(self.status, DeliveryStatus::Delivered(code) if (200..300).contains(&code))
    }
}

/// POST the alert to the configured webhook.
///
/// An unset endpoint yields a skipped receipt; failures are retried once and
/// then logged. Either way the job is unaffected.
pub fn send_alert(msg: &AlertMessage, endpoint: Option<&str>) -> DeliveryReceipt {
    let Some(endpoint) = endpoint.filter(|e| !e.is_empty()) else {
        return DeliveryReceipt {
            status: DeliveryStatus::Skipped,
            attempts: 0,
        };
    };
    let payload = serde_json::json!({
        "title": msg.title,
        "body": msg.body,
        "severity": msg.severity,
    });

    let mut last_error = String::new();
    for attempt in 1..=2u32 {
        match ureq::post(endpoint).send_json(&payload) {
            Ok(response) if response.status().is_success() => {
                return DeliveryReceipt {
                    status: DeliveryStatus::Delivered(response.status().as_u16()),
                    attempts: attempt,
                };
            }
            Ok(response) => {
                last_error = format!("status {}", response.status().as_u16());
            }
            Err(e) => {
                last_error = e.to_string();
            }
        }
    }
    tracing::warn!(job = %msg.job_ref, error = %last_error, "alert delivery failed");
    DeliveryReceipt {
        status: DeliveryStatus::Failed(last_error),
        attempts: 2,
    }
}

// ---------------------------------------------------------------------------
// Mail workflow
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MailMessage {
    pub id: String,
    pub from: String,
    pub to: String,
    pub subject: String,
    pub body: String,
    pub received_at_ms: TimestampMs,
}

/// Read-only mail views exposed to the coordinator. The bundled default is
/// an in-process mailbox; real mail systems plug in behind this trait.
pub trait MailBackend: Send + Sync {
    fn registered_emails(&self) -> Result<Vec<String>, ReportingError>;
    /// Messages ordered by `received_at` descending.
    fn list_messages(&self, account: &str) -> Result<Vec<MailMessage>, ReportingError>;
    fn message_by_id(&self, account: &str, id: &str) -> Result<MailMessage, ReportingError>;
}

#[derive(Default)]
pub struct InMemoryMailbox {
    accounts: Mutex<BTreeMap<String, Vec<MailMessage>>>,
}

impl InMemoryMailbox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_account(&self, address: &str) {
        self.accounts
            .lock()
            .unwrap()
            .entry(address.to_string())
            .or_default();
    }

    /// Message ids must be unique per account.
    pub fn deliver(&self, account: &str, message: MailMessage) -> Result<(), ReportingError> {
        let mut accounts = self.accounts.lock().unwrap();
        let inbox = accounts.entry(account.to_string()).or_default();
        if inbox.iter().any(|m| m.id == message.id) {
            return Err(ReportingError::DeliveryFailed(format!(
                "duplicate message id {} for {account}",
                message.id
            )));
        }
        inbox.push(message);
        Ok(())
    }
}

impl MailBackend for InMemoryMailbox {
    fn registered_emails(&self) -> Result<Vec<String>, ReportingError> {
        Ok(self.accounts.lock().unwrap().keys().cloned().collect())
    }

    fn list_messages(&self, account: &str) -> Result<Vec<MailMessage>, ReportingError> {
        let accounts = self.accounts.lock().unwrap();
        let inbox = accounts
            .get(account)
            .ok_or_else(|| ReportingError::NotFound(format!("account {account}")))?;
        let mut messages = inbox.clone();
        messages.sort_by(|a, b| {
            b.received_at_ms
                .cmp(&a.received_at_ms)
                .then(a.id.cmp(&b.id))
        });
        Ok(messages)
    }

    fn message_by_id(&self, account: &str, id: &str) -> Result<MailMessage, ReportingError> {
        self.list_messages(account)?
            .into_iter()
            .find(|m| m.id == id)
            .ok_or_else(|| ReportingError::NotFound(format!("message {id} in {account}")))
    }
}

// ---------------------------------------------------------------------------
// Report synthesis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportedEvidence {
    pub kind: crate::domain::EvidenceKind,
    /// Path relative to the run directory.
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportedFinding {
    pub id: String,
    pub title: String,
    pub category: String,
    pub severity: Severity,
    pub explanation: String,
    pub evidence: Vec<ReportedEvidence>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub job_id: String,
    pub mode: String,
    pub state: String,
    pub target: String,
    pub stop_reason: StopReason,
    pub attempts: u32,
    pub findings: Vec<ReportedFinding>,
    pub usage: UsageRecord,
    pub cost_dollars: f64,
    pub wall_seconds: f64,
}

pub struct ReportPaths {
    pub json: std::path::PathBuf,
    pub markdown: std::path::PathBuf,
}

/// Two-digit obfuscated-name alias derived from the job id.
fn osn_alias(job_id: &str) -> String {
    let digest: u32 = job_id
        .bytes()
        .fold(17u32, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u32));
    format!("OSN-{:02}", digest % 100)
}

/// Identifier substrings that must not survive anonymization.
fn identity_strings(job: &Job) -> Vec<String> {
    let mut out = vec![job.target.url.clone()];
    if let Some(host) = job
        .target
        .url
        .split("//")
        .nth(1)
        .map(|rest| rest.split('/').next().unwrap_or(rest).to_string())
    {
        if !host.is_empty() {
            out.push(host.clone());
            if let Some(bare) = host.split(':').next() {
                out.push(bare.to_string());
            }
        }
    }
    if let Some(path) = &job.target.source_path {
        out.push(path.clone());
        if let Some(name) = std::path::Path::new(path)
            .file_name()
            .and_then(|n| n.to_str())
        {
            out.push(name.to_string());
        }
    }
    out.sort_by_key(|s| std::cmp::Reverse(s.len()));
    out.dedup();
    out.retain(|s| !s.is_empty());
    out
}

fn anonymize_text(text: &str, identities: &[String], alias: &str) -> String {
    let mut out = text.to_string();
    for identity in identities {
        if out.contains(identity.as_str()) {
            out = out.replace(identity.as_str(), alias);
        }
    }
    out
}

/// Write `report.json` and `report.md` into the run directory.
///
/// Evidence bodies are persisted under `evidence/` and referenced by
/// relative path. With `anonymize` set, the target identity is replaced by
/// an OSN-style alias in both documents.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_report(
    job: &Job,
    findings: &[Finding],
    usage: &UsageRecord,
    cost_dollars: f64,
    stop_reason: StopReason,
    attempts: u32,
    run_dir: &RunDir,
    anonymize: bool,
) -> Result<ReportPaths, ReportingError> {
    let mut reported = Vec::with_capacity(findings.len());
    for finding in findings {
        let mut evidence = Vec::new();
        for item in &finding.evidence {
            let path = run_dir.write_evidence(item)?;
            evidence.push(ReportedEvidence {
                kind: item.kind,
                path,
            });
        }
        reported.push(ReportedFinding {
            id: finding.id.clone(),
            title: finding.title.clone(),
            category: finding.category.label().to_string(),
            severity: finding.severity,
            explanation: finding.verdict.explanation.clone(),
            evidence,
        });
    }

    let document = ReportDocument {
        schema: "pentora.report/1".into(),
        job_id: job.id.clone(),
        mode: job.mode.to_string(),
        state: serde_json::to_value(job.state)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        target: job.target.url.clone(),
        stop_reason,
        attempts,
        findings: reported,
        usage: usage.clone(),
        cost_dollars,
        wall_seconds: usage.wall_seconds(),
    };

    let json_text = serde_json::to_string_pretty(&document)
        .map_err(|e| ReportingError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    let md_text = render_markdown(&document);

    let (json_text, md_text) = if anonymize {
        let identities = identity_strings(job);
        let alias = osn_alias(&job.id);
        (
            anonymize_text(&json_text, &identities, &alias),
            anonymize_text(&md_text, &identities, &alias),
        )
    } else {
        (json_text, md_text)
    };

    let json = run_dir.write_text("report.json", &json_text)?;
    let markdown = run_dir.write_text("report.md", &md_text)?;
    Ok(ReportPaths { json, markdown })
}

fn render_markdown(doc: &ReportDocument) -> String {
    use std::fmt::Write;
    let mut md = String::new();
    let _ = writeln!(md, "# Assessment report: {}\n", doc.job_id);
    let _ = writeln!(md, "- Target: {}", doc.target);
    let _ = writeln!(md, "- Mode: {}", doc.mode);
    let _ = writeln!(md, "- Final state: {}", doc.state);
    let _ = writeln!(md, "- Stop reason: {}", doc.stop_reason.label());
    let _ = writeln!(md, "- Attempts: {}", doc.attempts);
    let _ = writeln!(md, "- Wall clock: {:.1} s", doc.wall_seconds);
    let _ = writeln!(md, "- Cost: ${:.4}", doc.cost_dollars);
    let _ = writeln!(
        md,
        "- Tokens: {} regular / {} cached / {} output / {} reasoning",
        doc.usage.regular_input_tokens,
        doc.usage.cached_tokens,
        doc.usage.output_tokens,
        doc.usage.reasoning_tokens
    );
    let _ = writeln!(md, "- Tool calls: {}\n", doc.usage.total_tool_calls());

    if doc.findings.is_empty() {
        let _ = writeln!(md, "## Findings\n\nNone validated.");
    } else {
        let _ = writeln!(md, "## Findings\n");
        for finding in &doc.findings {
            let _ = writeln!(
                md,
                "### {} — {:?} ({})\n",
                finding.title, finding.severity, finding.category
            );
            let _ = writeln!(md, "{}\n", finding.explanation);
            for evidence in &finding.evidence {
                let _ = writeln!(md, "- evidence: `{}`", evidence.path);
            }
            let _ = writeln!(md);
        }
    }
    md
}
