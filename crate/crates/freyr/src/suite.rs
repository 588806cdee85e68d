//! Loading benchmark suites and the reference reply scripts bundled with
//! them.

use std::path::Path;

use freyr_core::bench::{StepSpec, TestSuite};
use freyr_core::Mode;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scripted::ScriptedReply;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("PARSE_ERROR at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("PARSE_ERROR in step {step}: {message}")]
    Step { step: usize, message: String },
    #[error("invalid suite: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for SuiteError {
    fn from(e: serde_json::Error) -> Self {
        SuiteError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Parses a suite, reporting a malformed step by its 1-based index.
pub fn parse_suite(text: &str) -> Result<TestSuite, SuiteError> {
    let mut root: Value = serde_json::from_str(text)?;
    let steps = match root.get_mut("steps").map(Value::take) {
        Some(Value::Array(steps)) => steps,
        Some(_) => return Err(SuiteError::Invalid("'steps' must be an array".into())),
        None => return Err(SuiteError::Invalid("missing 'steps'".into())),
    };
    let name = root
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| SuiteError::Invalid("missing 'name'".into()))?
        .to_string();
    let description = root
        .get("description")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let steps = steps
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            serde_json::from_value::<StepSpec>(s).map_err(|e| SuiteError::Step {
                step: i + 1,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let suite = TestSuite {
        name,
        description,
        steps,
    };
    suite.validate().map_err(SuiteError::Invalid)?;
    Ok(suite)
}

pub fn load_suite(path: &Path) -> Result<TestSuite, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_suite(&text)
}

/// Canned replies per step, for each mode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScriptBook {
    pub suite: String,
    #[serde(default)]
    pub freyr: Vec<Vec<ScriptedReply>>,
    #[serde(default)]
    pub tools: Vec<Vec<ScriptedReply>>,
}

impl ScriptBook {
    pub fn parse(text: &str) -> Result<Self, SuiteError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn steps(&self, mode: Mode) -> &[Vec<ScriptedReply>] {
        match mode {
            Mode::Freyr => &self.freyr,
            Mode::Tools => &self.tools,
        }
    }

    pub fn steps_mut(&mut self, mode: Mode) -> &mut Vec<Vec<ScriptedReply>> {
        match mode {
            Mode::Freyr => &mut self.freyr,
            Mode::Tools => &mut self.tools,
        }
    }
}

macro_rules! bundle {
    ($($name:literal),*) => {
        /// Suites shipped with the crate, as `(name, suite json, script json)`.
        pub const BUNDLED: &[(&str, &str, &str)] = &[$((
            $name,
            include_str!(concat!("../suites/", $name, ".json")),
            include_str!(concat!("../suites/", $name, ".script.json")),
        )),*];
    };
}

bundle!("T1", "T2", "T3", "T4", "T5");

pub fn bundled(name: &str) -> Option<(TestSuite, ScriptBook)> {
    let (_, suite, script) = BUNDLED
        .iter()
        .find(|(n, _, _)| n.eq_ignore_ascii_case(name))?;
    let suite = parse_suite(suite).expect("bundled suite parses");
    let script = ScriptBook::parse(script).expect("bundled script parses");
    Some((suite, script))
}
