//! Role prompt assembly. Wording lives in the text assets under
//! `prompts/`; this module only fills placeholders and orders messages.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::backend::Message;
use crate::dungeon::Dungeon;
use crate::tools::{render_intent_catalog, render_parameter_prompt, ToolRegistry, ToolSpec};

pub const INTENT: &str = include_str!("../../prompts/intent.txt");
pub const PARAMETERS: &str = include_str!("../../prompts/parameters.txt");
pub const SUMMARY: &str = include_str!("../../prompts/summary.txt");
pub const CHAT: &str = include_str!("../../prompts/chat.txt");
pub const TOOLS: &str = include_str!("../../prompts/tools.txt");

/// Prompts see at most this many earlier messages.
pub const HISTORY_LIMIT: usize = 10;

const CHAT_FALLBACK: &str = "The designer's last message could not be matched to the editing tools, so nothing was changed. Apologise briefly and ask them to rephrase the request.";

/// Replaces `{key}` placeholders in one pass, so substituted text is never
/// re-scanned.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            let key = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out.trim_end().into()
}

pub fn history_tail(conversation: &[Message]) -> &[Message] {
    &conversation[conversation.len().saturating_sub(HISTORY_LIMIT)..]
}

fn with_history(system: String, conversation: &[Message], message: &str) -> Vec<Message> {
    let mut msgs = Vec::with_capacity(HISTORY_LIMIT + 2);
    msgs.push(Message::system(system));
    msgs.extend(history_tail(conversation).iter().cloned());
    msgs.push(Message::user(message));
    msgs
}

fn feedback_block(feedback: Option<&str>) -> String {
    match feedback {
        Some(f) => format!(
            "\n\nYour previous answer failed with this error:\n{f}\nCorrect it and answer again in the same format."
        ),
        None => String::new(),
    }
}

pub fn intent_messages(
    registry: &ToolRegistry,
    level: &Dungeon,
    conversation: &[Message],
    message: &str,
    feedback: Option<&str>,
) -> Vec<Message> {
    let catalog = render_intent_catalog(registry);
    let level = level.compact();
    let mut system = fill(INTENT, &[("catalog", &catalog), ("level", &level)]);
    system.push_str(&feedback_block(feedback));
    with_history(system, conversation, message)
}

/// One parameters call. `plan` is the whole intent list and `index` the
/// position of this call in it; `done` holds the outputs so far.
#[allow(clippy::too_many_arguments)]
pub fn parameter_messages(
    tool: &ToolSpec,
    level: &Dungeon,
    conversation: &[Message],
    message: &str,
    plan: &[String],
    index: usize,
    done: &[String],
    feedback: Option<&str>,
) -> Vec<Message> {
    let position = format!("{} of {} ({})", index + 1, plan.len(), tool.name);
    let plan = plan.join(", ");
    let mut system = fill(PARAMETERS, &[("plan", &plan), ("position", &position)]);
    system.push_str("\n\n");
    system.push_str(&render_parameter_prompt(tool, level));
    if !done.is_empty() {
        system.push_str("\n\nAlready done for this request:");
        for d in done {
            system.push_str("\n- ");
            system.push_str(d);
        }
    }
    system.push_str(&feedback_block(feedback));
    with_history(system, conversation, message)
}

/// The summary role sees the outputs and the level only.
pub fn summary_messages(outputs: &[String], level: &Dungeon) -> Vec<Message> {
    let mut results = String::from("Results:");
    for o in outputs {
        results.push_str("\n- ");
        results.push_str(o);
    }
    results.push_str("\n\nLevel now:\n");
    results.push_str(&level.compact());
    alloc::vec![Message::system(fill(SUMMARY, &[])), Message::user(results)]
}

pub fn chat_messages(
    level: &Dungeon,
    conversation: &[Message],
    message: &str,
    fallback: bool,
) -> Vec<Message> {
    let level = level.compact();
    let mut system = fill(CHAT, &[("level", &level)]);
    if fallback {
        system.push_str("\n\n");
        system.push_str(CHAT_FALLBACK);
    }
    with_history(system, conversation, message)
}

pub fn tools_messages(level: &Dungeon, conversation: &[Message], message: &str) -> Vec<Message> {
    let level = level.compact();
    with_history(fill(TOOLS, &[("level", &level)]), conversation, message)
}
