//! Text renderings of the registry shown to models.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::{ParamSpec, ToolRegistry, ToolSpec};
use crate::dungeon::Dungeon;

/// One `name: summary` line per tool, in registry order.
pub fn render_intent_catalog(reg: &ToolRegistry) -> String {
    let lines: Vec<String> = reg
        .tools()
        .iter()
        .map(|t| format!("{}: {}", t.name, t.summary))
        .collect();
    lines.join("\n")
}

/// The parameters-role view of one tool: its parameter list, the current
/// level, and the answer format.
pub fn render_parameter_prompt(tool: &ToolSpec, level: &Dungeon) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Tool: {}", tool.name);
    let _ = writeln!(out, "{}", tool.description);
    let _ = writeln!(out);
    let _ = writeln!(out, "Parameters:");
    for p in &tool.params {
        let flag = if p.required { "required" } else { "optional" };
        let _ = writeln!(
            out,
            "- {} ({}, {}): {}",
            p.name,
            p.kind.as_str(),
            flag,
            p.description
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Current level:");
    let _ = writeln!(out, "{}", level.compact());
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "Answer only with a bulleted list, one parameter per line, in the form:"
    );
    let _ = writeln!(out, "- parameter_name: value");
    out.push_str("Leave out optional parameters you do not need. Do not write anything else.");
    out
}

#[derive(Serialize)]
struct Function<'a> {
    name: &'a str,
    description: &'a str,
    parameters: Parameters<'a>,
}

#[derive(Serialize)]
struct Parameters<'a> {
    #[serde(rename = "type")]
    ty: &'static str,
    properties: Properties<'a>,
    required: Vec<&'a str>,
}

#[derive(Serialize)]
struct Property<'a> {
    #[serde(rename = "type")]
    ty: &'static str,
    description: &'a str,
}

/// Declared order rather than alphabetical.
struct Properties<'a>(&'a [ParamSpec]);

impl Serialize for Properties<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for p in self.0 {
            map.serialize_entry(
                p.name,
                &Property {
                    ty: p.kind.json_type(),
                    description: p.description,
                },
            )?;
        }
        map.end()
    }
}

/// Function-calling schema: a pretty-printed JSON array of
/// `{name, description, parameters}` objects, keys in a fixed order.
pub fn render_json_schema(reg: &ToolRegistry) -> String {
    let functions: Vec<Function<'_>> = reg
        .tools()
        .iter()
        .map(|t| Function {
            name: t.name,
            description: t.description,
            parameters: Parameters {
                ty: "object",
                properties: Properties(&t.params),
                required: t
                    .params
                    .iter()
                    .filter(|p| p.required)
                    .map(|p| p.name)
                    .collect(),
            },
        })
        .collect();
    serde_json::to_string_pretty(&functions).expect("schema serialization is infallible")
}
