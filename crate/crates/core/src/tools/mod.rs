//! The level-editing tools: their declared parameters, parameter binding
//! and coercion, execution against a level, and the text renderings the
//! pipeline and the baseline show to a model.

mod edit;
mod render;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::dungeon::{validate_with, DomainLimits, Dungeon};

pub use render::{render_intent_catalog, render_json_schema, render_parameter_prompt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamKind {
    Text,
    Integer,
    Number,
    RoomRef,
    CorridorRef,
    EntityRef,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Text => "text",
            ParamKind::Integer => "integer",
            ParamKind::Number => "number",
            ParamKind::RoomRef => "room-ref",
            ParamKind::CorridorRef => "corridor-ref",
            ParamKind::EntityRef => "entity-ref",
        }
    }

    /// JSON-schema primitive type used by the function-calling rendering.
    pub fn json_type(self) -> &'static str {
        match self {
            ParamKind::Integer => "integer",
            ParamKind::Number => "number",
            _ => "string",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub required: bool,
    pub description: &'static str,
}

/// Executes a tool: returns the edited level plus a success message, or a
/// functional-error message.
pub type ExecFn = fn(&ParamSet, &Dungeon, &DomainLimits) -> Result<(Dungeon, String), String>;

#[derive(Debug, Clone)]
pub struct ToolSpec {
    pub name: &'static str,
    /// One line for the intent catalog.
    pub summary: &'static str,
    /// Longer text for the function-calling schema.
    pub description: &'static str,
    pub params: Vec<ParamSpec>,
    pub exec: ExecFn,
}

impl ToolSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum ParamValue {
    Text(String),
    Integer(i64),
    Number(f64),
    Reference(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Text(s) | ParamValue::Reference(s) => f.write_str(s),
            ParamValue::Integer(i) => write!(f, "{i}"),
            ParamValue::Number(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamSet(pub BTreeMap<String, ParamValue>);

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.0.get(name)? {
            ParamValue::Text(s) | ParamValue::Reference(s) => Some(s.as_str()),
            _ => None,
        }
    }

    pub fn integer(&self, name: &str) -> Option<i64> {
        match self.0.get(name)? {
            ParamValue::Integer(i) => Some(*i),
            _ => None,
        }
    }

    pub fn number(&self, name: &str) -> Option<f64> {
        match self.0.get(name)? {
            ParamValue::Number(x) => Some(*x),
            ParamValue::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

/// Result of running a tool. `new_level` is present iff `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolOutcome {
    pub ok: bool,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_level: Option<Dungeon>,
}

impl ToolOutcome {
    fn failure(message: String) -> Self {
        Self {
            ok: false,
            message,
            new_level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("UNKNOWN_TOOL: no tool named '{0}'")]
pub struct UnknownTool(pub String);

/// Why a raw parameter listing could not be bound to a tool. The display
/// text is what the model sees as retry feedback.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParamError {
    #[error("MISSING_PARAM: missing required parameter(s): {}", .0.join(", "))]
    MissingParam(Vec<String>),
    #[error("BAD_VALUE: parameter '{name}' is invalid: {reason}")]
    BadValue { name: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct ToolRegistry {
    tools: Vec<ToolSpec>,
    limits: DomainLimits,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

/// The standard sixteen-tool registry.
pub fn registry() -> ToolRegistry {
    ToolRegistry::standard()
}

impl ToolRegistry {
    pub fn standard() -> Self {
        Self {
            tools: edit::standard_tools(),
            limits: DomainLimits::default(),
        }
    }

    pub fn new(tools: Vec<ToolSpec>, limits: DomainLimits) -> Self {
        Self { tools, limits }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), DomainLimits::default())
    }

    pub fn with_limits(mut self, limits: DomainLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn limits(&self) -> &DomainLimits {
        &self.limits
    }

    pub fn tools(&self) -> &[ToolSpec] {
        &self.tools
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.iter().find(|t| t.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.tools.iter().map(|t| t.name)
    }

    /// Runs a tool. Functional errors come back as `ok == false`; the input
    /// level is never touched. A successful edit that would leave the level
    /// domain-invalid is turned into a functional error.
    pub fn execute(
        &self,
        name: &str,
        params: &ParamSet,
        level: &Dungeon,
    ) -> Result<ToolOutcome, UnknownTool> {
        let tool = self
            .get(name)
            .ok_or_else(|| UnknownTool(name.to_string()))?;
        Ok(match (tool.exec)(params, level, &self.limits) {
            Ok((new_level, message)) => {
                let report = validate_with(&new_level, &self.limits);
                if report.is_empty() {
                    ToolOutcome {
                        ok: true,
                        message,
                        new_level: Some(new_level),
                    }
                } else {
                    ToolOutcome::failure(format!(
                        "{name} failed: the edit would break level constraints: {report}"
                    ))
                }
            }
            Err(message) => ToolOutcome::failure(format!("{name} failed: {message}")),
        })
    }
}

/// Normalises a parameter key as a model may write it (`**Name**`, `` `name` ``,
/// `Room Name`).
pub fn normalize_key(raw: &str) -> String {
    let trimmed = raw
        .trim()
        .trim_matches(|c: char| matches!(c, '*' | '`' | '"' | '\'' | '_' | ' '));
    let mut out = String::with_capacity(trimmed.len());
    for c in trimmed.chars() {
        if c == ' ' || c == '-' {
            out.push('_');
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

fn strip_quotes(raw: &str) -> &str {
    let s = raw.trim();
    for (open, close) in [('"', '"'), ('\'', '\''), ('`', '`'), ('“', '”')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s
}

/// Coerces one raw textual value according to its declared kind.
pub fn coerce_value(kind: ParamKind, raw: &str) -> Result<ParamValue, String> {
    let s = strip_quotes(raw);
    match kind {
        ParamKind::Text => Ok(ParamValue::Text(s.to_string())),
        ParamKind::RoomRef | ParamKind::CorridorRef | ParamKind::EntityRef => {
            Ok(ParamValue::Reference(s.to_string()))
        }
        ParamKind::Integer => {
            let digits: String = s.chars().filter(|c| !matches!(c, ',' | '_')).collect();
            let digits = digits.strip_prefix('+').unwrap_or(&digits);
            if let Ok(i) = digits.parse::<i64>() {
                return Ok(ParamValue::Integer(i));
            }
            match digits.parse::<f64>() {
                Ok(x) if x.is_finite() && x == libm::trunc(x) && libm::fabs(x) < 9.0e15 => {
                    Ok(ParamValue::Integer(x as i64))
                }
                _ => Err(format!("not an integer (got '{s}')")),
            }
        }
        ParamKind::Number => {
            let digits: String = s.chars().filter(|c| !matches!(c, ',' | '_')).collect();
            match digits.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(ParamValue::Number(x)),
                _ => Err(format!("not a number (got '{s}')")),
            }
        }
    }
}

/// Binds raw `(key, value)` pairs to a tool's declared parameters.
///
/// Keys are normalised, empty values count as absent, unknown keys are
/// dropped and reported in the returned warnings, the last duplicate wins.
/// Bad values are reported before missing ones.
pub fn bind_params(
    tool: &ToolSpec,
    raw: &[(String, String)],
) -> Result<(ParamSet, Vec<String>), ParamError> {
    let mut warnings = Vec::new();
    let mut set = ParamSet::new();
    for (key, value) in raw {
        let key = normalize_key(key);
        let Some(spec) = tool.param(&key) else {
            warnings.push(format!(
                "ignored unknown parameter '{key}' for {}",
                tool.name
            ));
            continue;
        };
        if strip_quotes(value).is_empty() {
            continue;
        }
        let v = coerce_value(spec.kind, value).map_err(|reason| ParamError::BadValue {
            name: key.clone(),
            reason,
        })?;
        if set.0.insert(key.clone(), v).is_some() {
            warnings.push(format!(
                "parameter '{key}' given more than once; kept the last value"
            ));
        }
    }
    let missing: Vec<String> = tool
        .params
        .iter()
        .filter(|p| p.required && !set.contains(p.name))
        .map(|p| p.name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ParamError::MissingParam(missing));
    }
    Ok((set, warnings))
}
