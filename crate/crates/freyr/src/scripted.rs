//! Deterministic backend that replays canned replies in FIFO order and keeps
//! a transcript of every prompt it was shown.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use freyr_core::{
    count_prompt_tokens, count_tokens, BackendError, ChatBackend, Completion, Message, Role,
    RoleConfig, ToolCall, ToolReply, UsageRecord,
};
use serde::{Deserialize, Serialize};

/// Simulated seconds charged per call when no real delay is configured.
pub const SIMULATED_LATENCY: f64 = 0.05;

/// One canned reply. In JSON a plain string is a text reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedReply {
    Text(String),
    Calls {
        calls: Vec<ToolCall>,
    },
    /// Tool-calling reply whose arguments were unusable.
    Malformed {
        malformed: String,
    },
    /// Transport failure.
    Unreachable {
        unreachable: String,
    },
}

impl ScriptedReply {
    pub fn text(s: impl Into<String>) -> Self {
        ScriptedReply::Text(s.into())
    }
}

/// One call as the backend saw it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exchange {
    pub role: Role,
    pub messages: Vec<Message>,
    pub schema: Option<String>,
    pub reply: Option<ScriptedReply>,
}

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    queue: Mutex<VecDeque<ScriptedReply>>,
    transcript: Mutex<Vec<Exchange>>,
    delay: Option<Duration>,
}

impl ScriptedBackend {
    pub fn new(replies: impl IntoIterator<Item = ScriptedReply>) -> Self {
        Self {
            queue: Mutex::new(replies.into_iter().collect()),
            transcript: Mutex::default(),
            delay: None,
        }
    }

    pub fn texts<S: AsRef<str>>(replies: &[S]) -> Self {
        Self::new(replies.iter().map(|s| ScriptedReply::text(s.as_ref())))
    }

    /// Really sleep for `delay` on every call, and report that as wall time.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn push(&self, reply: ScriptedReply) {
        self.queue.lock().expect("script queue").push_back(reply);
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("script queue").len()
    }

    pub fn transcript(&self) -> Vec<Exchange> {
        self.transcript.lock().expect("transcript").clone()
    }

    pub fn calls(&self) -> usize {
        self.transcript.lock().expect("transcript").len()
    }

    fn next(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: Option<&str>,
    ) -> Option<ScriptedReply> {
        let reply = self.queue.lock().expect("script queue").pop_front();
        self.transcript.lock().expect("transcript").push(Exchange {
            role: cfg.role,
            messages: messages.to_vec(),
            schema: schema.map(str::to_string),
            reply: reply.clone(),
        });
        reply
    }

    fn elapsed(&self) -> f64 {
        match self.delay {
            Some(d) => {
                std::thread::sleep(d);
                d.as_secs_f64()
            }
            None => SIMULATED_LATENCY,
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, cfg: &RoleConfig, messages: &[Message]) -> Result<Completion, BackendError> {
        let reply = self
            .next(cfg, messages, None)
            .ok_or(BackendError::ScriptExhausted(cfg.role))?;
        let secs = self.elapsed();
        let text = match reply {
            ScriptedReply::Text(t) => t,
            ScriptedReply::Calls { calls } => serde_json::to_string(&calls).unwrap_or_default(),
            ScriptedReply::Malformed { malformed } => malformed,
            ScriptedReply::Unreachable { unreachable } => {
                return Err(BackendError::Unreachable(unreachable))
            }
        };
        let usage = UsageRecord::new(
            count_prompt_tokens(messages, None),
            count_tokens(&text),
            secs,
        );
        Ok(Completion { text, usage })
    }

    fn complete_with_tools(
        &self,
        cfg: &RoleConfig,
        messages: &[Message],
        schema: &str,
    ) -> Result<(ToolReply, UsageRecord), BackendError> {
        let reply = self
            .next(cfg, messages, Some(schema))
            .ok_or(BackendError::ScriptExhausted(cfg.role))?;
        let secs = self.elapsed();
        let tokens_in = count_prompt_tokens(messages, Some(schema));
        match reply {
            ScriptedReply::Text(t) => {
                let usage = UsageRecord::new(tokens_in, count_tokens(&t), secs);
                Ok((ToolReply::Text(t), usage))
            }
            ScriptedReply::Calls { calls } => {
                let out = serde_json::to_string(&calls).unwrap_or_default();
                Ok((
                    ToolReply::Calls(calls),
                    UsageRecord::new(tokens_in, count_tokens(&out), secs),
                ))
            }
            ScriptedReply::Malformed { malformed } => {
                let usage = UsageRecord::new(tokens_in, count_tokens(&malformed), secs);
                Err(BackendError::MalformedToolCall {
                    detail: malformed,
                    usage,
                })
            }
            ScriptedReply::Unreachable { unreachable } => {
                Err(BackendError::Unreachable(unreachable))
            }
        }
    }
}
