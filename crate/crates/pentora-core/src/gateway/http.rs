//! HTTP chat-completions backend.
//!
//! Speaks the widely implemented chat-completions wire shape with
//! function/tool calling. The request/response mapping is kept in pure
//! functions so the wire format is testable without a live endpoint; the
//! transport retries once on connection failure and otherwise surfaces
//! typed errors.

use serde_json::{json, Value};

use super::{
    check_history_preconditions, ArgValue, ChatMessage, ParamKind, Provider, ProviderError,
    ProviderParams, ProviderResponse, Role, TokenUsage, ToolCall, ToolSchema,
};

#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub model: String,
    pub timeout_secs: u64,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            api_key_env: "PENTORA_API_KEY".into(),
            model: "default".into(),
            timeout_secs: 120,
        }
    }
}

pub struct HttpProvider {
    config: HttpProviderConfig,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn api_key(&self) -> String {
        std::env::var(&self.config.api_key_env).unwrap_or_default()
    }

    fn post_once(&self, body: &Value) -> Result<(u16, Value), ProviderError> {
        let mut response = self
            .agent
            .post(&self.config.endpoint)
            .header("authorization", &format!("Bearer {}", self.api_key()))
            .send_json(body)
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = response.status().as_u16();
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Malformed(format!("non-JSON response: {e}")))?;
        Ok((status, value))
    }
}

impl Provider for HttpProvider {
    fn complete(
        &self,
        history: &[ChatMessage],
        tools: &[ToolSchema],
        params: &ProviderParams,
    ) -> Result<ProviderResponse, ProviderError> {
        check_history_preconditions(history)?;
        let model = if params.model.is_empty() {
            &self.config.model
        } else {
            &params.model
        };
        let body = build_request_body(history, tools, model, params.temperature);
        let started = std::time::Instant::now();
        // One reconnect on transport failure, nothing beyond that.
        let (status, value) = match self.post_once(&body) {
            Ok(ok) => ok,
            Err(ProviderError::Unavailable(_)) => self.post_once(&body)?,
            Err(other) => return Err(other),
        };
        let latency_ms = started.elapsed().as_millis() as u64;
        let mut response = parse_response_body(status, &value)?;
        response.latency_ms = latency_ms;
        Ok(response)
    }
}

// ---------------------------------------------------------------------------
// Wire mapping
// ---------------------------------------------------------------------------

fn role_str(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
        Role::Tool => "tool",
    }
}

fn arg_to_json(value: &ArgValue) -> Value {
    match value {
        ArgValue::Bool(b) => json!(b),
        ArgValue::Number(n) => json!(n),
        ArgValue::Text(t) => json!(t),
    }
}

pub fn build_request_body(
    history: &[ChatMessage],
    tools: &[ToolSchema],
    model: &str,
    temperature: Option<f64>,
) -> Value {
    let messages: Vec<Value> = history
        .iter()
        .map(|msg| {
            let mut out = json!({
                "role": role_str(msg.role),
                "content": msg.content,
            });
            if !msg.tool_calls.is_empty() {
                out["tool_calls"] = Value::Array(
                    msg.tool_calls
                        .iter()
                        .map(|call| {
                            let args: serde_json::Map<String, Value> = call
                                .arguments
                                .iter()
                                .map(|(k, v)| (k.clone(), arg_to_json(v)))
                                .collect();
                            json!({
                                "id": call.id,
                                "type": "function",
                                "function": {
                                    "name": call.name,
                                    "arguments": Value::Object(args).to_string(),
                                }
                            })
                        })
                        .collect(),
                );
            }
            if let Some(id) = &msg.tool_call_id {
                out["tool_call_id"] = json!(id);
            }
            out
        })
        .collect();

    let tool_specs: Vec<Value> = tools
        .iter()
        .map(|schema| {
            let mut properties = serde_json::Map::new();
            let mut required = Vec::new();
            for param in &schema.params {
                let kind = match param.kind {
                    ParamKind::Text => "string",
                    ParamKind::Number => "number",
                    ParamKind::Bool => "boolean",
                };
                properties.insert(param.name.clone(), json!({"type": kind}));
                if param.required {
                    required.push(json!(param.name));
                }
            }
            json!({
                "type": "function",
                "function": {
                    "name": schema.name,
                    "description": schema.description,
                    "parameters": {
                        "type": "object",
                        "properties": Value::Object(properties),
                        "required": Value::Array(required),
                    }
                }
            })
        })
        .collect();

    let mut body = json!({
        "model": model,
        "messages": messages,
    });
    if !tool_specs.is_empty() {
        body["tools"] = Value::Array(tool_specs);
    }
    if let Some(t) = temperature {
        body["temperature"] = json!(t);
    }
    body
}

pub fn parse_response_body(status: u16, value: &Value) -> Result<ProviderResponse, ProviderError> {
    if status == 400 || status == 413 {
        let text = value.to_string();
        if text.contains("context_length") || text.contains("maximum context") {
            return Err(ProviderError::ContextOverflow);
        }
        return Err(ProviderError::Malformed(format!("status {status}: {text}")));
    }
    if status == 429 || status >= 500 {
        return Err(ProviderError::Unavailable(format!("status {status}")));
    }
    if status >= 300 {
        return Err(ProviderError::Malformed(format!("status {status}")));
    }

    let message = value
        .pointer("/choices/0/message")
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message".into()))?;
    let content = message
        .get("content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();

    let mut tool_calls = Vec::new();
    if let Some(calls) = message.get("tool_calls").and_then(Value::as_array) {
        for (index, call) in calls.iter().enumerate() {
            let id = call
                .get("id")
                .and_then(Value::as_str)
                .map(str::to_string)
                .unwrap_or_else(|| format!("call-{index}"));
            let name = call
                .pointer("/function/name")
                .and_then(Value::as_str)
                .ok_or_else(|| ProviderError::Malformed("tool call without function name".into()))?
                .to_string();
            let raw_args = call
                .pointer("/function/arguments")
                .and_then(Value::as_str)
                .unwrap_or("{}");
            let parsed: Value = serde_json::from_str(raw_args)
                .map_err(|e| ProviderError::Malformed(format!("tool arguments not JSON: {e}")))?;
            let arguments = match parsed {
                Value::Object(map) => map
                    .iter()
                    .map(|(k, v)| (k.clone(), ArgValue::from_json(v)))
                    .collect(),
                other => [("value".to_string(), ArgValue::from_json(&other))]
                    .into_iter()
                    .collect(),
            };
            tool_calls.push(ToolCall {
                id,
                name,
                arguments,
            });
        }
    }

    if content.is_empty() && tool_calls.is_empty() {
        return Err(ProviderError::Malformed(
            "assistant turn carries neither content nor tool calls".into(),
        ));
    }

    let prompt = value
        .pointer("/usage/prompt_tokens")
        .and_then(Value::as_u64)
        .unwrap_or(0);
    let cached = value
        .pointer("/usage/prompt_tokens_details/cached_tokens")
        .and_then(Value::as_u64)
        .unwrap_or(0)
        .min(prompt);
    let output = value
        .pointer("/usage/completion_tokens")
        .and_then(Value::as_u64)
        .unwrap_or(0);
    let reasoning = value
        .pointer("/usage/completion_tokens_details/reasoning_tokens")
        .and_then(Value::as_u64)
        .unwrap_or(0)
        .min(output);

    Ok(ProviderResponse {
        message: ChatMessage::assistant_with_calls(content, tool_calls),
        usage: TokenUsage {
            regular_input: prompt - cached,
            cached_input: cached,
            output,
            reasoning,
        },
        latency_ms: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_body_carries_messages_and_tools() {
        let history = vec![
            ChatMessage::system("you are a tester"),
            ChatMessage::user("probe the target"),
        ];
        let tools = vec![ToolSchema::new("run_command", "run a shell command").param(
            "command",
            ParamKind::Text,
            true,
        )];
        let body = build_request_body(&history, &tools, "m1", Some(0.2));
        assert_eq!(body["model"], "m1");
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["tools"][0]["function"]["name"], "run_command");
        assert_eq!(
            body["tools"][0]["function"]["parameters"]["required"][0],
            "command"
        );
        assert_eq!(body["temperature"], 0.2);
    }

    #[test]
    fn parses_tool_call_response_with_usage() {
        let raw = json!({
            "choices": [{"message": {
                "role": "assistant",
                "content": null,
                "tool_calls": [{
                    "id": "abc",
                    "type": "function",
                    "function": {"name": "run_command", "arguments": "{\"command\": \"ls\", \"nested\": {\"a\": 1}}"}
                }]
            }}],
            "usage": {
                "prompt_tokens": 120,
                "completion_tokens": 40,
                "prompt_tokens_details": {"cached_tokens": 100},
                "completion_tokens_details": {"reasoning_tokens": 10}
            }
        });
        let response = parse_response_body(200, &raw).unwrap();
        let call = &response.message.tool_calls[0];
        assert_eq!(call.name, "run_command");
        assert_eq!(call.text_arg("command").as_deref(), Some("ls"));
        assert_eq!(call.text_arg("nested").as_deref(), Some("{\"a\":1}"));
        assert_eq!(response.usage.regular_input, 20);
        assert_eq!(response.usage.cached_input, 100);
        assert_eq!(response.usage.output, 40);
        assert_eq!(response.usage.reasoning, 10);
    }

    #[test]
    fn context_length_error_maps_to_overflow() {
        let raw = json!({"error": {"code": "context_length_exceeded"}});
        let err = parse_response_body(400, &raw).unwrap_err();
        assert!(matches!(err, ProviderError::ContextOverflow));
    }

    #[test]
    fn server_errors_are_retryable() {
        let err = parse_response_body(503, &json!({})).unwrap_err();
        assert!(err.is_retryable());
    }

    /// One-shot chat-completions endpoint; returns the request it saw.
    fn fake_endpoint(response: Value) -> (String, std::thread::JoinHandle<(String, String)>) {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut auth = String::new();
            let mut content_length = 0usize;
            loop {
                let mut header = String::new();
                reader.read_line(&mut header).unwrap();
                let header = header.trim().to_string();
                if header.is_empty() {
                    break;
                }
                let lowered = header.to_ascii_lowercase();
                if let Some(value) = lowered.strip_prefix("authorization:") {
                    auth = value.trim().to_string();
                }
                if let Some(value) = lowered.strip_prefix("content-length:") {
                    content_length = value.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; content_length];
            reader.read_exact(&mut body).unwrap();
            let payload = response.to_string();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            )
            .unwrap();
            (auth, String::from_utf8_lossy(&body).into_owned())
        });
        (format!("http://{addr}/v1/chat/completions"), handle)
    }

    #[test]
    fn transport_round_trip_against_a_local_endpoint() {
        let canned = json!({
            "choices": [{"message": {"role": "assistant", "content": "hello from the wire"}}],
            "usage": {"prompt_tokens": 17, "completion_tokens": 5}
        });
        let (endpoint, server) = fake_endpoint(canned);
        std::env::set_var("PENTORA_TEST_WIRE_KEY", "wire-key-1");
        let provider = HttpProvider::new(HttpProviderConfig {
            endpoint,
            api_key_env: "PENTORA_TEST_WIRE_KEY".into(),
            model: "m-test".into(),
            timeout_secs: 5,
        });
        let history = vec![
            ChatMessage::system("you are a tester"),
            ChatMessage::user("say hello"),
        ];
        let tools = vec![ToolSchema::new("run_command", "run").param("command", ParamKind::Text, true)];
        let response = provider
            .complete(&history, &tools, &ProviderParams::default())
            .unwrap();
        assert_eq!(response.message.content, "hello from the wire");
        assert_eq!(response.usage.regular_input, 17);
        assert_eq!(response.usage.output, 5);

        let (auth, body) = server.join().unwrap();
        assert_eq!(auth, "bearer wire-key-1");
        let request: Value = serde_json::from_str(&body).unwrap();
        assert_eq!(request["model"], "m-test");
        assert_eq!(request["messages"][1]["content"], "say hello");
        assert_eq!(request["tools"][0]["function"]["name"], "run_command");
    }

    #[test]
    fn unreachable_endpoint_is_unavailable_after_one_reconnect() {
        let provider = HttpProvider::new(HttpProviderConfig {
            endpoint: "http://127.0.0.1:1/v1/chat/completions".into(),
            api_key_env: "PENTORA_TEST_WIRE_KEY".into(),
            model: "m".into(),
            timeout_secs: 1,
        });
        let history = vec![ChatMessage::system("s"), ChatMessage::user("u")];
        let err = provider
            .complete(&history, &[], &ProviderParams::default())
            .unwrap_err();
        assert!(err.is_retryable());
    }
}
