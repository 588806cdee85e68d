//! The four-role pipeline: intent detection, per-intent parameter
//! generation with bounded retries, tool execution, and summarisation, with a
//! chat branch for plain conversation.

mod parse;
pub mod prompts;

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{
    BackendError, ChatBackend, GenerationOptions, Message, Role, RoleConfig, UsageRecord,
};
use crate::dungeon::Dungeon;
use crate::tools::{ParamSet, ToolRegistry};

pub use parse::{parse_intents, parse_params, IntentError, Intents, CONVERSATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Freyr,
    Tools,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Freyr => "freyr",
            Mode::Tools => "tools",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "freyr" => Ok(Mode::Freyr),
            "tools" => Ok(Mode::Tools),
            other => Err(format!("unknown mode '{other}' (expected freyr or tools)")),
        }
    }
}

pub const DEFAULT_ENDPOINT: &str = "http://localhost:11434";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub intent: RoleConfig,
    pub parameters: RoleConfig,
    pub summary: RoleConfig,
    pub chat: RoleConfig,
    /// Parameter attempts per intent (and intent attempts per step).
    pub max_retries: u32,
    pub max_intents: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::uniform(GenerationOptions::default(), DEFAULT_ENDPOINT)
    }
}

impl PipelineConfig {
    /// Same model and endpoint for every role.
    pub fn uniform(options: GenerationOptions, endpoint: &str) -> Self {
        let rc = |role| RoleConfig::new(role, options.clone(), endpoint);
        Self {
            intent: rc(Role::Intent),
            parameters: rc(Role::Parameters),
            summary: rc(Role::Summary),
            chat: rc(Role::Chat),
            max_retries: 3,
            max_intents: 10,
        }
    }

    pub fn role(&self, role: Role) -> &RoleConfig {
        match role {
            Role::Intent => &self.intent,
            Role::Parameters => &self.parameters,
            Role::Summary => &self.summary,
            Role::Chat => &self.chat,
        }
    }

    pub fn role_mut(&mut self, role: Role) -> &mut RoleConfig {
        match role {
            Role::Intent => &mut self.intent,
            Role::Parameters => &mut self.parameters,
            Role::Summary => &mut self.summary,
            Role::Chat => &mut self.chat,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_retries < 1 {
            return Err("max_retries must be at least 1".into());
        }
        if self.max_intents < 1 {
            return Err("max_intents must be at least 1".into());
        }
        for role in Role::ALL {
            let rc = self.role(role);
            if rc.role != role {
                return Err(format!("the {role} slot is configured as role {}", rc.role));
            }
            if rc.endpoint.trim().is_empty() {
                return Err(format!("{role}: endpoint must not be empty"));
            }
            rc.options.validate().map_err(|e| format!("{role}: {e}"))?;
        }
        Ok(())
    }
}

/// Emitted while a step runs, in the order things happen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum PipelineEvent {
    IntentDetected {
        intents: Vec<String>,
        conversation: bool,
    },
    ToolStarted {
        index: usize,
        intent: String,
        attempt: u32,
    },
    ToolSucceeded {
        index: usize,
        intent: String,
        attempt: u32,
        message: String,
    },
    ToolFailed {
        index: usize,
        intent: String,
        attempt: u32,
        message: String,
    },
    Retry {
        index: usize,
        intent: String,
        attempt: u32,
        feedback: String,
    },
    SummaryReady {
        role: Role,
        response: String,
    },
}

impl PipelineEvent {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineEvent::IntentDetected { .. } => "intent_detected",
            PipelineEvent::ToolStarted { .. } => "tool_started",
            PipelineEvent::ToolSucceeded { .. } => "tool_succeeded",
            PipelineEvent::ToolFailed { .. } => "tool_failed",
            PipelineEvent::Retry { .. } => "retry",
            PipelineEvent::SummaryReady { .. } => "summary_ready",
        }
    }
}

/// One model call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleCall {
    pub role: Role,
    pub label: String,
    pub prompt_summary: String,
    pub response: String,
    pub usage: UsageRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolAttempt {
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamSet>,
    pub ok: bool,
    pub message: String,
}

/// Everything that happened for one intent (or, in tools mode, one call).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub index: usize,
    pub intent: String,
    pub attempts: Vec<ToolAttempt>,
    /// Failed attempts.
    pub retries: u32,
    pub feedback: Vec<String>,
    pub ok: bool,
    pub output: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl IntentRecord {
    fn new(index: usize, intent: &str) -> Self {
        Self {
            index,
            intent: intent.to_string(),
            attempts: Vec::new(),
            retries: 0,
            feedback: Vec::new(),
            ok: false,
            output: String::new(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub mode: Mode,
    pub message: String,
    pub calls: Vec<RoleCall>,
    pub intents: Vec<String>,
    /// The step took the chat branch.
    pub conversation: bool,
    /// The intent reply never parsed and the step fell back to chat.
    pub intent_fallback: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intent_feedback: Vec<String>,
    pub tools: Vec<IntentRecord>,
    pub outputs: Vec<String>,
    pub events: Vec<PipelineEvent>,
    pub response: String,
    pub total: UsageRecord,
}

impl PipelineTrace {
    pub fn new(mode: Mode, message: &str) -> Self {
        Self {
            mode,
            message: message.to_string(),
            calls: Vec::new(),
            intents: Vec::new(),
            conversation: false,
            intent_fallback: false,
            intent_feedback: Vec::new(),
            tools: Vec::new(),
            outputs: Vec::new(),
            events: Vec::new(),
            response: String::new(),
            total: UsageRecord::default(),
        }
    }

    pub fn retries(&self) -> u32 {
        self.tools.iter().map(|t| t.retries).sum()
    }

    pub fn call_count(&self, role: Role) -> usize {
        self.calls.iter().filter(|c| c.role == role).count()
    }

    pub fn usage_of(&self, role: Role) -> UsageRecord {
        self.calls
            .iter()
            .filter(|c| c.role == role)
            .map(|c| c.usage)
            .sum()
    }

    /// Sum of the per-call records.
    pub fn summed_usage(&self) -> UsageRecord {
        self.calls.iter().map(|c| c.usage).sum()
    }

    /// True when every tool that ran succeeded and at least one ran.
    pub fn all_tools_ok(&self) -> bool {
        !self.tools.is_empty() && self.tools.iter().all(|t| t.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub response: String,
    pub level: Dungeon,
    pub trace: PipelineTrace,
}

/// A transport failure ended the step early. The partial trace is kept.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("PIPELINE_ABORT: {error}")]
pub struct PipelineAbort {
    pub error: BackendError,
    pub trace: Box<PipelineTrace>,
}

/// Records calls and events into a trace and forwards events to a sink.
pub(crate) struct Recorder<'a> {
    pub(crate) trace: PipelineTrace,
    sink: &'a mut dyn FnMut(&PipelineEvent),
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(mode: Mode, message: &str, sink: &'a mut dyn FnMut(&PipelineEvent)) -> Self {
        Self {
            trace: PipelineTrace::new(mode, message),
            sink,
        }
    }

    pub(crate) fn emit(&mut self, event: PipelineEvent) {
        (self.sink)(&event);
        self.trace.events.push(event);
    }

    pub(crate) fn record(
        &mut self,
        role: Role,
        label: String,
        messages: &[Message],
        response: &str,
        usage: UsageRecord,
    ) {
        let chars: usize = messages.iter().map(|m| m.content.chars().count()).sum();
        self.trace.calls.push(RoleCall {
            role,
            label,
            prompt_summary: format!("{} message(s), {chars} chars", messages.len()),
            response: response.to_string(),
            usage,
        });
    }

    pub(crate) fn complete<B: ChatBackend + ?Sized>(
        &mut self,
        backend: &B,
        cfg: &RoleConfig,
        label: String,
        messages: &[Message],
    ) -> Result<String, BackendError> {
        let c = backend.complete(cfg, messages)?;
        self.record(cfg.role, label, messages, &c.text, c.usage);
        Ok(c.text)
    }

    pub(crate) fn abort(mut self, error: BackendError) -> PipelineAbort {
        self.trace.total = self.trace.summed_usage();
        PipelineAbort {
            error,
            trace: Box::new(self.trace),
        }
    }

    pub(crate) fn finish(mut self, response: String, level: Dungeon) -> StepOutput {
        self.trace.response = response.clone();
        self.trace.total = self.trace.summed_usage();
        StepOutput {
            response,
            level,
            trace: self.trace,
        }
    }
}

macro_rules! tri {
    ($rec:ident, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Err($rec.abort(err)),
        }
    };
}
pub(crate) use tri;

/// Runs one designer message through the pipeline.
///
/// Intent, parameter and tool failures end up in the trace; only backend
/// transport errors abort. The returned level carries every successful edit.
#[allow(clippy::too_many_arguments)]
pub fn run_step<B: ChatBackend + ?Sized>(
    cfg: &PipelineConfig,
    registry: &ToolRegistry,
    backend: &B,
    conversation: &[Message],
    message: &str,
    level: &Dungeon,
    events: &mut dyn FnMut(&PipelineEvent),
) -> Result<StepOutput, PipelineAbort> {
    let mut rec = Recorder::new(Mode::Freyr, message, events);
    let max_retries = cfg.max_retries.max(1);

    let mut intents = None;
    let mut feedback: Option<String> = None;
    for attempt in 1..=max_retries {
        let msgs =
            prompts::intent_messages(registry, level, conversation, message, feedback.as_deref());
        let reply = tri!(
            rec,
            rec.complete(backend, &cfg.intent, format!("intent #{attempt}"), &msgs)
        );
        match parse_intents(&reply, registry, cfg.max_intents) {
            Ok(i) => {
                intents = Some(i);
                break;
            }
            Err(e) => {
                let text = e.to_string();
                rec.trace.intent_feedback.push(text.clone());
                feedback = Some(text);
            }
        }
    }

    let plan = match intents {
        Some(Intents::Tools(plan)) => plan,
        other => {
            let fallback = other.is_none();
            rec.trace.conversation = true;
            rec.trace.intent_fallback = fallback;
            rec.emit(PipelineEvent::IntentDetected {
                intents: Vec::new(),
                conversation: true,
            });
            let msgs = prompts::chat_messages(level, conversation, message, fallback);
            let response = tri!(rec, rec.complete(backend, &cfg.chat, "chat".into(), &msgs));
            rec.emit(PipelineEvent::SummaryReady {
                role: Role::Chat,
                response: response.clone(),
            });
            return Ok(rec.finish(response, level.clone()));
        }
    };

    rec.trace.intents = plan.clone();
    rec.emit(PipelineEvent::IntentDetected {
        intents: plan.clone(),
        conversation: false,
    });

    let mut current = level.clone();
    let mut outputs: Vec<String> = Vec::new();
    for (index, intent) in plan.iter().enumerate() {
        let tool = registry
            .get(intent)
            .expect("parse_intents only yields registry names");
        let mut record = IntentRecord::new(index, intent);
        let mut feedback: Option<String> = None;
        for attempt in 1..=max_retries {
            rec.emit(PipelineEvent::ToolStarted {
                index,
                intent: intent.clone(),
                attempt,
            });
            let msgs = prompts::parameter_messages(
                tool,
                &current,
                conversation,
                message,
                &plan,
                index,
                &outputs,
                feedback.as_deref(),
            );
            let label = format!("parameters {intent} #{attempt}");
            let reply = tri!(rec, rec.complete(backend, &cfg.parameters, label, &msgs));
            let (params, result) = match parse_params(&reply, tool) {
                Ok((set, warnings)) => {
                    record.warnings.extend(warnings);
                    let outcome = registry
                        .execute(intent, &set, &current)
                        .expect("registry name");
                    let result = match outcome.new_level {
                        Some(next) if outcome.ok => Ok((next, outcome.message)),
                        _ => Err(outcome.message),
                    };
                    (Some(set), result)
                }
                Err(e) => (None, Err(e.to_string())),
            };
            match result {
                Ok((next, msg)) => {
                    current = next;
                    record.attempts.push(ToolAttempt {
                        attempt,
                        params,
                        ok: true,
                        message: msg.clone(),
                    });
                    record.ok = true;
                    record.output = msg.clone();
                    outputs.push(msg.clone());
                    rec.emit(PipelineEvent::ToolSucceeded {
                        index,
                        intent: intent.clone(),
                        attempt,
                        message: msg,
                    });
                    break;
                }
                Err(msg) => {
                    record.attempts.push(ToolAttempt {
                        attempt,
                        params,
                        ok: false,
                        message: msg.clone(),
                    });
                    record.retries += 1;
                    record.feedback.push(msg.clone());
                    record.output = msg.clone();
                    rec.emit(PipelineEvent::ToolFailed {
                        index,
                        intent: intent.clone(),
                        attempt,
                        message: msg.clone(),
                    });
                    if attempt < max_retries {
                        rec.emit(PipelineEvent::Retry {
                            index,
                            intent: intent.clone(),
                            attempt: attempt + 1,
                            feedback: msg.clone(),
                        });
                    }
                    feedback = Some(msg);
                }
            }
        }
        if !record.ok {
            outputs.push(record.output.clone());
        }
        rec.trace.tools.push(record);
    }

    rec.trace.outputs = outputs.clone();
    let msgs = prompts::summary_messages(&outputs, &current);
    let response = tri!(
        rec,
        rec.complete(backend, &cfg.summary, "summary".into(), &msgs)
    );
    rec.emit(PipelineEvent::SummaryReady {
        role: Role::Summary,
        response: response.clone(),
    });
    Ok(rec.finish(response, current))
}

/// Runs a step in either mode.
#[allow(clippy::too_many_arguments)]
pub fn run_mode<B: ChatBackend + ?Sized>(
    mode: Mode,
    cfg: &PipelineConfig,
    registry: &ToolRegistry,
    backend: &B,
    conversation: &[Message],
    message: &str,
    level: &Dungeon,
    events: &mut dyn FnMut(&PipelineEvent),
) -> Result<StepOutput, PipelineAbort> {
    match mode {
        Mode::Freyr => run_step(cfg, registry, backend, conversation, message, level, events),
        Mode::Tools => crate::baseline::run_step_tools(
            cfg,
            registry,
            backend,
            conversation,
            message,
            level,
            events,
        ),
    }
}
