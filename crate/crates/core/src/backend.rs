//! Completion interface shared by the pipeline and the baseline, plus the
//! token and latency records every call produces.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// The four pipeline roles. Tools mode drives every query through the
/// `parameters` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Intent,
    Parameters,
    Summary,
    Chat,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Intent, Role::Parameters, Role::Summary, Role::Chat];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Intent => "intent",
            Role::Parameters => "parameters",
            Role::Summary => "summary",
            Role::Chat => "chat",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
}

impl Message {
    pub fn new(role: MessageRole, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(MessageRole::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(MessageRole::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(MessageRole::Assistant, content)
    }

    pub fn tool(content: impl Into<String>) -> Self {
        Self::new(MessageRole::Tool, content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOptions {
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        Self {
            model: "qwen2.5:7b".into(),
            temperature: 0.8,
            top_p: 0.6,
        }
    }
}

impl GenerationOptions {
    pub fn validate(&self) -> Result<(), String> {
        if self.model.trim().is_empty() {
            return Err("model must not be empty".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(alloc::format!(
                "temperature must be >= 0 (got {})",
                self.temperature
            ));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(alloc::format!(
                "top_p must be in (0, 1] (got {})",
                self.top_p
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub role: Role,
    pub options: GenerationOptions,
    pub endpoint: String,
}

impl RoleConfig {
    pub fn new(role: Role, options: GenerationOptions, endpoint: impl Into<String>) -> Self {
        Self {
            role,
            options,
            endpoint: endpoint.into(),
        }
    }
}

/// Tokens and seconds spent on one or more calls. Records add up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub wall_time: f64,
}

impl UsageRecord {
    pub fn new(tokens_in: u64, tokens_out: u64, wall_time: f64) -> Self {
        Self {
            tokens_in,
            tokens_out,
            wall_time,
        }
    }
}

impl Add for UsageRecord {
    type Output = UsageRecord;

    fn add(self, o: UsageRecord) -> UsageRecord {
        UsageRecord {
            tokens_in: self.tokens_in + o.tokens_in,
            tokens_out: self.tokens_out + o.tokens_out,
            wall_time: self.wall_time + o.wall_time,
        }
    }
}

impl AddAssign for UsageRecord {
    fn add_assign(&mut self, o: UsageRecord) {
        *self = *self + o;
    }
}

impl Sum for UsageRecord {
    fn sum<I: Iterator<Item = UsageRecord>>(iter: I) -> Self {
        iter.fold(UsageRecord::default(), Add::add)
    }
}

impl<'a> Sum<&'a UsageRecord> for UsageRecord {
    fn sum<I: Iterator<Item = &'a UsageRecord>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: UsageRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: serde_json::Map<String, serde_json::Value>,
}

/// What a function-calling query came back with.
#[derive(Debug, Clone, PartialEq)]
pub enum ToolReply {
    Calls(Vec<ToolCall>),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("BACKEND_UNREACHABLE: {0}")]
    Unreachable(String),
    #[error("BACKEND_ERROR({status}): {body}")]
    Error { status: u16, body: String },
    #[error("SCRIPT_EXHAUSTED: no scripted reply left for the {0} role")]
    ScriptExhausted(Role),
    /// The server answered, but a tool call's arguments were not an object.
    /// Carries the usage of the call so it can still be accounted.
    #[error("MALFORMED_TOOL_CALL: {detail}")]
    MalformedToolCall { detail: String, usage: UsageRecord },
}

impl BackendError {
    /// Transport-level failures abort a step; a malformed tool call is fed
    /// back to the model instead.
    pub fn is_transport(&self) -> bool {
        !matches!(self, BackendError::MalformedToolCall { .. })
    }
}

/// A chat model reachable through some transport. Implementations must be
/// shareable across threads.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError>;

    /// Native function calling. `schema` is the rendered JSON schema text.
    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError> {
        (**self).complete(cfg, messages)
    }

    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError> {
        (**self).complete_with_tools(cfg, messages, schema)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for alloc::sync::Arc<B> {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError> {
        (**self).complete(cfg, messages)
    }

    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError> {
        (**self).complete_with_tools(cfg, messages, schema)
    }
}

/// Approximate token count: whitespace-separated words times 4/3, rounded
/// up. Used when a server reports no counts, and for schema-size reports.
/// Not a real tokenizer.
pub fn count_tokens(text: &str) -> u64 {
    let words = text.split_whitespace().count() as u64;
    (words * 4).div_ceil(3)
}

/// [`count_tokens`] over every message, plus the schema if one was sent.
pub fn count_prompt_tokens(messages: &[Message], schema: Option<&str>) -> u64 {
    messages
        .iter()
        .map(|m| count_tokens(&m.content))
        .sum::<u64>()
        + schema.map_or(0, count_tokens)
}
