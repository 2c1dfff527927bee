//! Provider-agnostic chat interface with tool calling.
//!
//! A [`Provider`] maps a conversation history plus a tool registry to one
//! assistant turn and reports token usage for that call. The gateway never
//! mutates history; callers own transcript growth. Two implementations ship:
//! [`scripted::ScriptedProvider`] replays a fixture deterministically for
//! offline runs and tests, and [`http::HttpProvider`] speaks a
//! chat-completions-style wire protocol against a real backend.

pub mod http;
pub mod scripted;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use scripted::{load_fixture, ScriptedProvider};

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// One entry in an agent transcript.
///
/// Tool messages carry the id of the call they answer; assistant messages
/// carry text, tool calls, or both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
        }
    }

    pub fn assistant_with_calls(content: impl Into<String>, tool_calls: Vec<ToolCall>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            tool_calls,
            tool_call_id: None,
        }
    }

    /// Observation answering a specific tool call.
    pub fn tool(tool_call_id: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            role: Role::Tool,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: Some(tool_call_id.into()),
        }
    }

    /// Structural invariants: tool messages carry a call id, assistant
    /// messages carry content or tool calls.
    pub fn validate(&self) -> Result<(), ProviderError> {
        match self.role {
            Role::Tool if self.tool_call_id.is_none() => Err(ProviderError::Malformed(
                "tool message without tool_call_id".into(),
            )),
            Role::Assistant if self.content.is_empty() && self.tool_calls.is_empty() => {
                Err(ProviderError::Malformed(
                    "assistant message with neither content nor tool calls".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Tool calls
// ---------------------------------------------------------------------------

/// Flat argument value. Nested structures are serialized into text by the
/// provider layer before they reach the dispatcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl ArgValue {
    pub fn as_text(&self) -> String {
        match self {
            ArgValue::Bool(b) => b.to_string(),
            ArgValue::Number(n) => n.to_string(),
            ArgValue::Text(t) => t.clone(),
        }
    }

    /// Flatten arbitrary JSON into the flat argument model.
    pub fn from_json(value: &serde_json::Value) -> Self {
        match value {
            serde_json::Value::Bool(b) => ArgValue::Bool(*b),
            serde_json::Value::Number(n) => ArgValue::Number(n.as_f64().unwrap_or(0.0)),
            serde_json::Value::String(s) => ArgValue::Text(s.clone()),
            other => ArgValue::Text(other.to_string()),
        }
    }
}

/// A provider-requested action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub arguments: BTreeMap<String, ArgValue>,
}

impl ToolCall {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            arguments: BTreeMap::new(),
        }
    }

    pub fn with_arg(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.arguments
            .insert(key.into(), ArgValue::Text(value.into()));
        self
    }

    pub fn text_arg(&self, key: &str) -> Option<String> {
        self.arguments.get(key).map(ArgValue::as_text)
    }
}

// ---------------------------------------------------------------------------
// Tool schemas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Text,
    Number,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub required: bool,
}

/// Description of one tool in an agent's bounded action space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
}

impl ToolSchema {
    pub fn new(name: &str, description: &str) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            params: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, kind: ParamKind, required: bool) -> Self {
        self.params.push(ParamSpec {
            name: name.into(),
            kind,
            required,
        });
        self
    }
}

// ---------------------------------------------------------------------------
// Usage
// ---------------------------------------------------------------------------

/// Token counts for one provider call.
///
/// Reasoning tokens are a subset of billed output tokens: they are tracked
/// as their own class for observability but cost is computed from
/// regular/cached/output alone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    #[serde(default)]
    pub regular_input: u64,
    #[serde(default)]
    pub cached_input: u64,
    #[serde(default)]
    pub output: u64,
    #[serde(default)]
    pub reasoning: u64,
}

impl TokenUsage {
    pub fn new(
        regular_input: u64,
        cached_input: u64,
        output: u64,
        reasoning: u64,
    ) -> Result<Self, ProviderError> {
        let usage = Self {
            regular_input,
            cached_input,
            output,
            reasoning,
        };
        usage.validate()?;
        Ok(usage)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.reasoning > self.output {
            return Err(ProviderError::Malformed(format!(
                "reasoning tokens ({}) exceed output tokens ({})",
                self.reasoning, self.output
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.regular_input + self.cached_input + self.output
    }
}

/// One assistant turn plus its usage and latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub message: ChatMessage,
    pub usage: TokenUsage,
    #[serde(default)]
    pub latency_ms: u64,
}

impl ProviderResponse {
    pub fn latency(&self) -> Duration {
        Duration::from_millis(self.latency_ms)
    }
}

// ---------------------------------------------------------------------------
// Provider interface
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    /// Transient failure; callers may retry once.
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    /// Unusable response or exhausted fixture; not retryable.
    #[error("malformed provider response: {0}")]
    Malformed(String),
    /// History no longer fits; the caller must truncate observations.
    #[error("context overflow")]
    ContextOverflow,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Unavailable(_))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProviderParams {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

pub trait Provider: Send + Sync {
    /// Produce the next assistant turn for `history`.
    ///
    /// `history` must be non-empty and start with a system message; the
    /// returned assistant message either requests tool calls or carries
    /// final text, and usage is populated either way.
    fn complete(
        &self,
        history: &[ChatMessage],
        tools: &[ToolSchema],
        params: &ProviderParams,
    ) -> Result<ProviderResponse, ProviderError>;
}

pub(crate) fn check_history_preconditions(history: &[ChatMessage]) -> Result<(), ProviderError> {
    match history.first() {
        None => Err(ProviderError::Precondition("history is empty".into())),
        Some(first) if first.role != Role::System => Err(ProviderError::Precondition(
            "history must start with a system message".into(),
        )),
        Some(_) => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Overflow truncation
// ---------------------------------------------------------------------------

const TRUNCATED_OBSERVATION: &str = "[observation truncated: context overflow]";

/// Shrink a transcript after a context overflow.
///
/// Oldest tool observations are truncated first. The system message and the
/// last four exchanges (an assistant turn plus its tool observations) are
/// always preserved verbatim.
pub fn truncate_for_overflow(history: &[ChatMessage]) -> Vec<ChatMessage> {
    // Index of the assistant message opening the 4th-from-last exchange.
    let mut assistant_seen = 0usize;
    let mut protect_from = history.len();
    for (idx, msg) in history.iter().enumerate().rev() {
        if msg.role == Role::Assistant {
            assistant_seen += 1;
            protect_from = idx;
            if assistant_seen == 4 {
                break;
            }
        }
    }

    history
        .iter()
        .enumerate()
        .map(|(idx, msg)| {
            let protected = idx == 0 || idx >= protect_from;
            if !protected && msg.role == Role::Tool && msg.content != TRUNCATED_OBSERVATION {
                let mut shrunk = msg.clone();
                shrunk.content = TRUNCATED_OBSERVATION.to_string();
                shrunk
            } else {
                msg.clone()
            }
        })
        .collect()
}
