//! Native function-calling baseline: one model sees the full JSON schema on
//! every query and drives the whole step through tool calls.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{BackendError, ChatBackend, Message, Role, ToolCall, ToolReply};
use crate::dungeon::Dungeon;
use crate::pipeline::{
    prompts, tri, IntentRecord, Mode, PipelineAbort, PipelineConfig, PipelineEvent, Recorder,
    StepOutput, ToolAttempt,
};
use crate::tools::{bind_params, render_json_schema, ParamSet, ToolRegistry};

const EXHAUSTED_NOTE: &str =
    "The tool calls failed too many times and no more calls are allowed. Tell the designer what was done and what failed.";

/// Binds a native tool call's JSON arguments like the parameters role's
/// text: every scalar goes through the same coercion.
pub fn bind_call(
    registry: &ToolRegistry,
    call: &ToolCall,
) -> Result<(ParamSet, Vec<String>), String> {
    let tool = registry
        .get(&call.name)
        .ok_or_else(|| format!("UNKNOWN_TOOL: no tool named '{}'", call.name))?;
    let mut raw = Vec::with_capacity(call.arguments.len());
    for (key, value) in &call.arguments {
        let text = match value {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            other => {
                return Err(format!(
                    "BAD_VALUE: parameter '{key}' is invalid: expected a single value, got {other}"
                ))
            }
        };
        raw.push((key.clone(), text));
    }
    bind_params(tool, &raw).map_err(|e| e.to_string())
}

/// Runs one designer message in tools mode. Every query carries the schema
/// rendered by [`render_json_schema`]; functional errors and malformed calls
/// are fed back until `max_retries` failures, after which one plain call
/// produces the reply.
pub fn run_step_tools<B: ChatBackend + ?Sized>(
    cfg: &PipelineConfig,
    registry: &ToolRegistry,
    backend: &B,
    conversation: &[Message],
    message: &str,
    level: &Dungeon,
    events: &mut dyn FnMut(&PipelineEvent),
) -> Result<StepOutput, PipelineAbort> {
    let mut rec = Recorder::new(Mode::Tools, message, events);
    let max_retries = cfg.max_retries.max(1);
    let max_queries = cfg.max_intents as u32 + max_retries;
    let schema = render_json_schema(registry);
    let mut msgs = prompts::tools_messages(level, conversation, message);
    let mut current = level.clone();
    let mut outputs: Vec<String> = Vec::new();
    let mut failures = 0u32;
    let mut response = None;

    for query in 1..=max_queries {
        let label = format!("tools #{query}");
        let (reply, usage) = match backend.complete_with_tools(&cfg.parameters, &msgs, &schema) {
            Ok(r) => r,
            Err(BackendError::MalformedToolCall { detail, usage }) => {
                let fb = format!("MALFORMED_TOOL_CALL: {detail}");
                rec.record(Role::Parameters, label, &msgs, &fb, usage);
                let index = rec.trace.tools.len();
                failures += 1;
                let record = IntentRecord {
                    index,
                    intent: "malformed_tool_call".into(),
                    attempts: alloc::vec![ToolAttempt {
                        attempt: failures,
                        params: None,
                        ok: false,
                        message: fb.clone()
                    }],
                    retries: 1,
                    feedback: alloc::vec![fb.clone()],
                    ok: false,
                    output: fb.clone(),
                    warnings: Vec::new(),
                };
                rec.trace.tools.push(record);
                rec.emit(PipelineEvent::ToolFailed {
                    index,
                    intent: "malformed_tool_call".into(),
                    attempt: failures,
                    message: fb.clone(),
                });
                if failures >= max_retries {
                    outputs.push(fb);
                    break;
                }
                rec.emit(PipelineEvent::Retry {
                    index,
                    intent: "malformed_tool_call".into(),
                    attempt: failures + 1,
                    feedback: fb.clone(),
                });
                msgs.push(Message::tool(format!(
                    "{fb}\nCall the tool again with a JSON object as arguments."
                )));
                continue;
            }
            Err(e) => return Err(rec.abort(e)),
        };

        let calls = match reply {
            ToolReply::Text(text) => {
                rec.record(Role::Parameters, label, &msgs, &text, usage);
                response = Some(text);
                break;
            }
            ToolReply::Calls(calls) => calls,
        };
        let shown = serde_json::to_string(&calls).unwrap_or_default();
        rec.record(Role::Parameters, label, &msgs, &shown, usage);
        let names: Vec<String> = calls.iter().map(|c| c.name.clone()).collect();
        rec.trace.intents.extend(names.iter().cloned());
        rec.emit(PipelineEvent::IntentDetected {
            intents: names,
            conversation: false,
        });
        msgs.push(Message {
            tool_calls: calls.clone(),
            ..Message::assistant("")
        });

        let mut failed = None;
        for call in &calls {
            let index = rec.trace.tools.len();
            let attempt = failures + 1;
            rec.emit(PipelineEvent::ToolStarted {
                index,
                intent: call.name.clone(),
                attempt,
            });
            let mut record = IntentRecord {
                index,
                intent: call.name.clone(),
                attempts: Vec::new(),
                retries: 0,
                feedback: Vec::new(),
                ok: false,
                output: String::new(),
                warnings: Vec::new(),
            };
            let (params, result) = match bind_call(registry, call) {
                Ok((set, warnings)) => {
                    record.warnings = warnings;
                    let outcome = registry
                        .execute(&call.name, &set, &current)
                        .expect("bound against registry");
                    let result = match outcome.new_level {
                        Some(next) if outcome.ok => Ok((next, outcome.message)),
                        _ => Err(outcome.message),
                    };
                    (Some(set), result)
                }
                Err(e) => (None, Err(e)),
            };
            match result {
                Ok((next, msg)) => {
                    current = next;
                    record.ok = true;
                    record.output = msg.clone();
                    record.attempts.push(ToolAttempt {
                        attempt,
                        params,
                        ok: true,
                        message: msg.clone(),
                    });
                    outputs.push(msg.clone());
                    msgs.push(Message::tool(msg.clone()));
                    rec.trace.tools.push(record);
                    rec.emit(PipelineEvent::ToolSucceeded {
                        index,
                        intent: call.name.clone(),
                        attempt,
                        message: msg,
                    });
                }
                Err(msg) => {
                    record.retries = 1;
                    record.output = msg.clone();
                    record.feedback.push(msg.clone());
                    record.attempts.push(ToolAttempt {
                        attempt,
                        params,
                        ok: false,
                        message: msg.clone(),
                    });
                    msgs.push(Message::tool(msg.clone()));
                    rec.trace.tools.push(record);
                    rec.emit(PipelineEvent::ToolFailed {
                        index,
                        intent: call.name.clone(),
                        attempt,
                        message: msg.clone(),
                    });
                    failed = Some((index, call.name.clone(), msg));
                    // Later calls in the same reply may depend on this one.
                    break;
                }
            }
        }

        if let Some((index, intent, msg)) = failed {
            failures += 1;
            if failures >= max_retries {
                outputs.push(msg);
                break;
            }
            rec.emit(PipelineEvent::Retry {
                index,
                intent,
                attempt: failures + 1,
                feedback: msg,
            });
        }
    }

    let response = match response {
        Some(text) => text,
        None => {
            msgs.push(Message::system(EXHAUSTED_NOTE));
            tri!(
                rec,
                rec.complete(backend, &cfg.parameters, "tools final".into(), &msgs)
            )
        }
    };
    rec.trace.outputs = outputs;
    rec.emit(PipelineEvent::SummaryReady {
        role: Role::Parameters,
        response: response.clone(),
    });
    Ok(rec.finish(response, current))
}
