//! Blocking client for an Ollama-compatible `/api/chat` endpoint.

use std::time::{Duration, Instant};

use freyr_core::{
    count_prompt_tokens, count_tokens, BackendError, ChatBackend, Completion, Message, MessageRole,
    RoleConfig, ToolCall, ToolReply, UsageRecord,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

/// Environment variable naming the default endpoint.
pub const ENDPOINT_ENV: &str = "FREYR_ENDPOINT";

/// `$FREYR_ENDPOINT`, or the local Ollama default.
pub fn default_endpoint() -> String {
    std::env::var(ENDPOINT_ENV)
        .ok()
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| freyr_core::pipeline::DEFAULT_ENDPOINT.to_string())
}

/// Talks to whatever endpoint each [`RoleConfig`] names, so roles may live on
/// different servers.
#[derive(Clone)]
pub struct OllamaBackend {
    agent: Agent,
}

impl std::fmt::Debug for OllamaBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OllamaBackend").finish_non_exhaustive()
    }
}

impl Default for OllamaBackend {
    fn default() -> Self {
        Self::new(Duration::from_secs(300))
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tool_calls: Vec<Value>,
}

#[derive(Deserialize, Default)]
struct ChatResponse {
    #[serde(default)]
    message: ResponseMessage,
    prompt_eval_count: Option<u64>,
    eval_count: Option<u64>,
}

#[derive(Deserialize, Default)]
struct ResponseMessage {
    #[serde(default)]
    content: String,
    #[serde(default)]
    tool_calls: Vec<Value>,
}

fn wire_role(r: MessageRole) -> &'static str {
    match r {
        MessageRole::System => "system",
        MessageRole::User => "user",
        MessageRole::Assistant => "assistant",
        MessageRole::Tool => "tool",
    }
}

fn wire_messages(messages: &[Message]) -> Vec<WireMessage<'_>> {
    messages
        .iter()
        .map(|m| WireMessage {
            role: wire_role(m.role),
            content: &m.content,
            tool_calls: m
                .tool_calls
                .iter()
                .map(|c| json!({"function": {"name": c.name, "arguments": c.arguments}}))
                .collect(),
        })
        .collect()
}

/// Wraps each function object of a rendered schema as an Ollama tool.
pub fn wire_tools(schema: &str) -> Result<Value, String> {
    let parsed: Value =
        serde_json::from_str(schema).map_err(|e| format!("tool schema is not JSON: {e}"))?;
    let Value::Array(funcs) = parsed else {
        return Err("tool schema must be a JSON array".into());
    };
    Ok(Value::Array(
        funcs
            .into_iter()
            .map(|f| json!({"type": "function", "function": f}))
            .collect(),
    ))
}

/// Reads `message.tool_calls`. Each call must look like
/// `{"function": {"name": .., "arguments": {..}}}`.
fn parse_tool_calls(raw: &[Value]) -> Result<Vec<ToolCall>, String> {
    raw.iter()
        .enumerate()
        .map(|(i, call)| {
            let f = call.get("function").unwrap_or(call);
            let name = f
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| format!("tool call {i} has no function name"))?;
            match f.get("arguments") {
                Some(Value::Object(args)) => Ok(ToolCall {
                    name: name.to_string(),
                    arguments: args.clone(),
                }),
                None | Some(Value::Null) => Ok(ToolCall {
                    name: name.to_string(),
                    arguments: Default::default(),
                }),
                Some(other) => Err(format!(
                    "arguments of tool call {i} ({name}) are not a JSON object: {other}"
                )),
            }
        })
        .collect()
}

impl OllamaBackend {
    pub fn new(timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }

    fn chat(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        tools: Option<Value>,
    ) -> Result<(ChatResponse, f64), BackendError> {
        let url = format!("{}/api/chat", cfg.endpoint.trim_end_matches('/'));
        let mut body = json!({
            "model": cfg.options.model,
            "messages": wire_messages(messages),
            "stream": false,
            "options": {"temperature": cfg.options.temperature, "top_p": cfg.options.top_p},
        });
        if let Some(t) = tools {
            body["tools"] = t;
        }
        tracing::debug!(role = %cfg.role, %url, "chat request");
        let start = Instant::now();
        let mut resp = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| BackendError::Unreachable(format!("{url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Unreachable(format!("{url}: reading body: {e}")))?;
        let elapsed = start.elapsed().as_secs_f64();
        if !(200..300).contains(&status) {
            return Err(BackendError::Error { status, body: text });
        }
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::Error {
                status,
                body: format!("unreadable response ({e}): {text}"),
            })?;
        Ok((parsed, elapsed))
    }
}

fn usage(
    resp: &ChatResponse,
    messages: &[Message],
    schema: Option<&str>,
    out_text: &str,
    secs: f64,
) -> UsageRecord {
    UsageRecord::new(
        resp.prompt_eval_count
            .unwrap_or_else(|| count_prompt_tokens(messages, schema)),
        resp.eval_count.unwrap_or_else(|| count_tokens(out_text)),
        secs,
    )
}

impl ChatBackend for OllamaBackend {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError> {
        let (resp, secs) = self.chat(cfg, messages, None)?;
        let usage = usage(&resp, messages, None, &resp.message.content, secs);
        Ok(Completion {
            text: resp.message.content,
            usage,
        })
    }

    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError> {
        let tools = wire_tools(schema).map_err(|body| BackendError::Error { status: 0, body })?;
        let (resp, secs) = self.chat(cfg, messages, Some(tools))?;
        let out_text = if resp.message.tool_calls.is_empty() {
            resp.message.content.clone()
        } else {
            serde_json::to_string(&resp.message.tool_calls).unwrap_or_default()
        };
        let usage = usage(&resp, messages, Some(schema), &out_text, secs);
        if resp.message.tool_calls.is_empty() {
            return Ok((ToolReply::Text(resp.message.content), usage));
        }
        match parse_tool_calls(&resp.message.tool_calls) {
            Ok(calls) => Ok((ToolReply::Calls(calls), usage)),
            Err(detail) => Err(BackendError::MalformedToolCall { detail, usage }),
        }
    }
}
