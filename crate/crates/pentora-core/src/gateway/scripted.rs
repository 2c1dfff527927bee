//! Deterministic scripted provider.
//!
//! Replays an ordered fixture of assistant turns regardless of history
//! content, records every history it was shown for later assertions, and
//! errors on fixture underrun. A looping fixture cycles forever, which is
//! how budget-cap behaviour is exercised without a real model.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::clock::VirtualClock;

use super::{
    check_history_preconditions, ArgValue, ChatMessage, Provider, ProviderError, ProviderParams,
    ProviderResponse, TokenUsage, ToolCall, ToolSchema,
};

// ---------------------------------------------------------------------------
// Fixture file format
// ---------------------------------------------------------------------------

/// One authored fixture step: an assistant turn or an injected error.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureStep {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub tool_calls: Vec<FixtureCall>,
    #[serde(default)]
    pub usage: TokenUsage,
    #[serde(default)]
    pub latency_ms: u64,
    /// "unavailable" or "context_overflow": the step raises instead of answering.
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureCall {
    pub name: String,
    #[serde(default)]
    pub arguments: std::collections::BTreeMap<String, ArgValue>,
}

/// A fixture file: either a bare JSON array of steps or
/// `{"loop": bool, "steps": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureFile {
    Steps(Vec<FixtureStep>),
    Tagged {
        #[serde(default, rename = "loop")]
        looping: bool,
        steps: Vec<FixtureStep>,
    },
}

impl FixtureFile {
    fn into_parts(self) -> (bool, Vec<FixtureStep>) {
        match self {
            FixtureFile::Steps(steps) => (false, steps),
            FixtureFile::Tagged { looping, steps } => (looping, steps),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Step {
    Respond(ProviderResponse),
    Fail(ProviderError),
}

fn step_from_fixture(step: FixtureStep, index: usize) -> Result<Step, ProviderError> {
    if let Some(kind) = step.error.as_deref() {
        return match kind {
            "unavailable" => Ok(Step::Fail(ProviderError::Unavailable(format!(
                "scripted failure at step {index}"
            )))),
            "context_overflow" => Ok(Step::Fail(ProviderError::ContextOverflow)),
            other => Err(ProviderError::Malformed(format!(
                "fixture step {index}: unknown error kind {other:?}"
            ))),
        };
    }
    step.usage.validate()?;
    let calls: Vec<ToolCall> = step
        .tool_calls
        .into_iter()
        .enumerate()
        .map(|(j, c)| ToolCall {
            id: format!("call-{index}-{j}"),
            name: c.name,
            arguments: c.arguments,
        })
        .collect();
    let text = step.text.unwrap_or_default();
    if text.is_empty() && calls.is_empty() {
        return Err(ProviderError::Malformed(format!(
            "fixture step {index} has neither text nor tool calls"
        )));
    }
    Ok(Step::Respond(ProviderResponse {
        message: ChatMessage::assistant_with_calls(text, calls),
        usage: step.usage,
        latency_ms: step.latency_ms,
    }))
}

/// Load a fixture file, applying `substitutions` (literal `{key}` → value)
/// to every text and argument before parsing.
pub fn load_fixture(
    path: &Path,
    substitutions: &[(&str, &str)],
) -> Result<ScriptedProvider, ProviderError> {
    let mut raw = std::fs::read_to_string(path)
        .map_err(|e| ProviderError::Malformed(format!("read {}: {e}", path.display())))?;
    for (key, value) in substitutions {
        raw = raw.replace(&format!("{{{key}}}"), value);
    }
    let file: FixtureFile = serde_json::from_str(&raw)
        .map_err(|e| ProviderError::Malformed(format!("parse {}: {e}", path.display())))?;
    let (looping, steps) = file.into_parts();
    let provider = ScriptedProvider::from_fixture_steps(steps)?;
    Ok(if looping {
        provider.looping()
    } else {
        provider
    })
}

// ---------------------------------------------------------------------------
// Provider
// ---------------------------------------------------------------------------

struct ScriptedState {
    cursor: usize,
    histories: Vec<Vec<ChatMessage>>,
}

pub struct ScriptedProvider {
    steps: Vec<Step>,
    looping: bool,
    state: Mutex<ScriptedState>,
    /// Advanced by each step's latency so scripted runs have deterministic
    /// wall-clock figures.
    clock: Option<VirtualClock>,
}

impl ScriptedProvider {
    pub fn new(fixture: Vec<ProviderResponse>) -> Self {
        assert!(!fixture.is_empty(), "fixture must be non-empty");
        Self {
            steps: fixture.into_iter().map(Step::Respond).collect(),
            looping: false,
            state: Mutex::new(ScriptedState {
                cursor: 0,
                histories: Vec::new(),
            }),
            clock: None,
        }
    }

    pub fn from_fixture_steps(steps: Vec<FixtureStep>) -> Result<Self, ProviderError> {
        if steps.is_empty() {
            return Err(ProviderError::Malformed("fixture has no steps".into()));
        }
        let steps = steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| step_from_fixture(s, i))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            steps,
            looping: false,
            state: Mutex::new(ScriptedState {
                cursor: 0,
                histories: Vec::new(),
            }),
            clock: None,
        })
    }

    /// Cycle through the fixture forever instead of erroring on underrun.
    pub fn looping(mut self) -> Self {
        self.looping = true;
        self
    }

    pub fn with_clock(mut self, clock: VirtualClock) -> Self {
        self.clock = Some(clock);
        self
    }

    /// Histories the provider was shown, in call order.
    pub fn recorded_histories(&self) -> Vec<Vec<ChatMessage>> {
        self.state.lock().unwrap().histories.clone()
    }

    pub fn calls_made(&self) -> usize {
        self.state.lock().unwrap().histories.len()
    }
}

impl Provider for ScriptedProvider {
    fn complete(
        &self,
        history: &[ChatMessage],
        _tools: &[ToolSchema],
        _params: &ProviderParams,
    ) -> Result<ProviderResponse, ProviderError> {
        check_history_preconditions(history)?;
        let step = {
            let mut state = self.state.lock().unwrap();
            state.histories.push(history.to_vec());
            let index = if self.looping {
                state.cursor % self.steps.len()
            } else if state.cursor < self.steps.len() {
                state.cursor
            } else {
                return Err(ProviderError::Malformed(format!(
                    "fixture exhausted after {} steps",
                    self.steps.len()
                )));
            };
            state.cursor += 1;
            self.steps[index].clone()
        };
        match step {
            Step::Respond(response) => {
                if let Some(clock) = &self.clock {
                    clock.advance_ms(response.latency_ms as i64);
                }
                Ok(response)
            }
            Step::Fail(err) => Err(err),
        }
    }
}

/// Shorthand for building programmatic fixtures in tests.
pub fn respond_with_call(name: &str, args: &[(&str, &str)], usage: TokenUsage) -> ProviderResponse {
    let mut call = ToolCall::new(format!("fx-{name}"), name);
    for (k, v) in args {
        call = call.with_arg(*k, *v);
    }
    ProviderResponse {
        message: ChatMessage::assistant_with_calls("", vec![call]),
        usage,
        latency_ms: 0,
    }
}

/// Shorthand for a final-text fixture entry.
pub fn respond_with_text(text: &str, usage: TokenUsage) -> ProviderResponse {
    ProviderResponse {
        message: ChatMessage::assistant(text),
        usage,
        latency_ms: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history() -> Vec<ChatMessage> {
        vec![ChatMessage::system("sys"), ChatMessage::user("go")]
    }

    fn fixture3() -> Vec<ProviderResponse> {
        vec![
            respond_with_call(
                "run_command",
                &[("command", "curl -s http://target/")],
                TokenUsage::zero(),
            ),
            respond_with_call(
                "run_command",
                &[("command", "curl -s http://target/hidden")],
                TokenUsage::zero(),
            ),
            respond_with_text("done", TokenUsage::zero()),
        ]
    }

    #[test]
    fn replays_fixture_in_order() {
        let provider = ScriptedProvider::new(fixture3());
        let params = ProviderParams::default();
        let first = provider.complete(&history(), &[], &params).unwrap();
        assert_eq!(first.message.tool_calls[0].name, "run_command");
        assert_eq!(
            first.message.tool_calls[0].text_arg("command").as_deref(),
            Some("curl -s http://target/")
        );
        provider.complete(&history(), &[], &params).unwrap();
        let third = provider.complete(&history(), &[], &params).unwrap();
        assert_eq!(third.message.content, "done");
    }

    #[test]
    fn underrun_is_malformed() {
        let provider = ScriptedProvider::new(fixture3());
        let params = ProviderParams::default();
        for _ in 0..3 {
            provider.complete(&history(), &[], &params).unwrap();
        }
        let err = provider.complete(&history(), &[], &params).unwrap_err();
        assert!(matches!(err, ProviderError::Malformed(_)));
    }

    #[test]
    fn records_histories() {
        let provider = ScriptedProvider::new(fixture3());
        let params = ProviderParams::default();
        for _ in 0..3 {
            provider.complete(&history(), &[], &params).unwrap();
        }
        let recorded = provider.recorded_histories();
        assert_eq!(recorded.len(), 3);
        assert_eq!(recorded[0][0].content, "sys");
    }

    #[test]
    fn missing_system_message_is_precondition_violation() {
        let provider = ScriptedProvider::new(fixture3());
        let err = provider
            .complete(
                &[ChatMessage::user("no system")],
                &[],
                &ProviderParams::default(),
            )
            .unwrap_err();
        assert!(matches!(err, ProviderError::Precondition(_)));
    }

    #[test]
    fn looping_fixture_cycles() {
        let provider = ScriptedProvider::new(fixture3()).looping();
        let params = ProviderParams::default();
        for _ in 0..7 {
            provider.complete(&history(), &[], &params).unwrap();
        }
        assert_eq!(provider.calls_made(), 7);
    }

    #[test]
    fn latency_advances_virtual_clock() {
        let clock = VirtualClock::new();
        let fixture = vec![ProviderResponse {
            message: ChatMessage::assistant("hi"),
            usage: TokenUsage::zero(),
            latency_ms: 1500,
        }];
        let provider = ScriptedProvider::new(fixture).with_clock(clock.clone());
        provider
            .complete(&history(), &[], &ProviderParams::default())
            .unwrap();
        assert_eq!(crate::clock::Clock::now_ms(&clock), 1500);
    }

    #[test]
    fn fixture_file_parses_both_shapes() {
        let bare: FixtureFile = serde_json::from_str(r#"[{"text": "hi"}]"#).unwrap();
        let (looping, steps) = bare.into_parts();
        assert!(!looping);
        assert_eq!(steps.len(), 1);

        let tagged: FixtureFile =
            serde_json::from_str(r#"{"loop": true, "steps": [{"text": "hi"}]}"#).unwrap();
        let (looping, steps) = tagged.into_parts();
        assert!(looping);
        assert_eq!(steps.len(), 1);
    }

    #[test]
    fn fixture_error_steps_raise() {
        let steps = vec![
            FixtureStep {
                error: Some("unavailable".into()),
                ..Default::default()
            },
            FixtureStep {
                text: Some("recovered".into()),
                ..Default::default()
            },
        ];
        let provider = ScriptedProvider::from_fixture_steps(steps).unwrap();
        let params = ProviderParams::default();
        let err = provider.complete(&history(), &[], &params).unwrap_err();
        assert!(err.is_retryable());
        let ok = provider.complete(&history(), &[], &params).unwrap();
        assert_eq!(ok.message.content, "recovered");
    }
}
