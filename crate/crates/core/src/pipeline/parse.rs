//! Parsers for the free-form replies of the intent and parameters roles.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tools::{bind_params, ParamError, ParamSet, ToolRegistry, ToolSpec};

pub const CONVERSATION: &str = "conversation";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "intents", rename_all = "lowercase")]
pub enum Intents {
    /// The sentinel `{conversation}`: no tool, answer through the chat role.
    Conversation,
    Tools(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntentError {
    #[error("UNKNOWN_INTENT: '{0}' is not a tool name or 'conversation'")]
    Unknown(String),
    #[error("UNKNOWN_INTENT: the reply did not name any tool")]
    Empty,
    #[error("TOO_MANY_INTENTS: {count} intents given, at most {max} allowed")]
    TooMany { count: usize, max: usize },
}

fn strip_marker(token: &str) -> &str {
    let t = token.trim();
    let t = t.trim_start_matches(['-', '*', '•', '+']).trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = t[digits..].strip_prefix(['.', ')']) {
            return rest.trim_start();
        }
    }
    t
}

fn normalize_intent(token: &str) -> String {
    let t = strip_marker(token);
    // "Intents: add_room" -> "add_room"
    let t = t.rsplit(':').next().unwrap_or(t);
    let t = t
        .trim()
        .trim_matches(|c: char| matches!(c, '`' | '"' | '\'' | '*' | '.' | ' '));
    t.chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .flat_map(char::to_lowercase)
        .collect()
}

/// Splits an intent reply on commas and newlines and normalises each token.
/// Duplicates are kept in order.
pub fn parse_intents(
    text: &str,
    registry: &ToolRegistry,
    max_intents: usize,
) -> Result<Intents, IntentError> {
    let tokens: Vec<String> = text
        .split([',', '\n'])
        .map(normalize_intent)
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err(IntentError::Empty);
    }
    let tools: Vec<String> = tokens
        .iter()
        .filter(|t| *t != CONVERSATION)
        .cloned()
        .collect();
    if tools.is_empty() {
        return Ok(Intents::Conversation);
    }
    if let Some(bad) = tools.iter().find(|t| registry.get(t).is_none()) {
        return Err(IntentError::Unknown(bad.clone()));
    }
    if tools.len() > max_intents {
        return Err(IntentError::TooMany {
            count: tools.len(),
            max: max_intents,
        });
    }
    Ok(Intents::Tools(tools))
}

/// Reads `- name: value` lines and binds them to `tool`'s parameters.
/// Lines without a colon are ignored. Returns the binding warnings too.
pub fn parse_params(text: &str, tool: &ToolSpec) -> Result<(ParamSet, Vec<String>), ParamError> {
    let raw: Vec<(String, String)> = text
        .lines()
        .filter_map(|line| {
            let line = strip_marker(line);
            let (key, value) = line.split_once(':')?;
            Some((key.to_string(), value.trim().to_string()))
        })
        .filter(|(k, _)| !k.trim().is_empty())
        .collect();
    bind_params(tool, &raw)
}
