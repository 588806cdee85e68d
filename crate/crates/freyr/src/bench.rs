//! Benchmark runner glue: backend selection, results files, comparisons.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use freyr_core::bench::report::Report;
use freyr_core::bench::run::CaseAbort;
use freyr_core::bench::{run_case, CaseResult, TestSuite};
use freyr_core::{ChatBackend, Mode, PipelineConfig, ToolRegistry};

use crate::config::{BackendKind, FreyrConfig};
use crate::ollama::OllamaBackend;
use crate::scripted::ScriptedBackend;
use crate::suite::ScriptBook;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Aborted(Box<CaseAbort>),
    #[error("the scripted backend needs a script: set `script` in the config or pass --script")]
    NoScript,
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Stats(#[from] freyr_core::bench::stats::StatsError),
}

/// Where replies come from during a case.
#[derive(Clone)]
pub enum Replies {
    Live(Arc<dyn ChatBackend>),
    /// Each step gets a fresh scripted backend loaded with that step's replies.
    Scripted(ScriptBook),
}

impl Replies {
    pub fn from_config(cfg: &FreyrConfig, script: Option<ScriptBook>) -> Result<Self, BenchError> {
        match cfg.backend {
            BackendKind::Ollama => Ok(Replies::Live(Arc::new(OllamaBackend::default()))),
            BackendKind::Scripted => script.map(Replies::Scripted).ok_or(BenchError::NoScript),
        }
    }

    fn backend(&self, mode: Mode, step: usize) -> Arc<dyn ChatBackend> {
        match self {
            Replies::Live(b) => b.clone(),
            Replies::Scripted(book) => {
                let replies = book.steps(mode).get(step).cloned().unwrap_or_default();
                Arc::new(ScriptedBackend::new(replies))
            }
        }
    }
}

pub fn run_suite(
    suite: &TestSuite,
    mode: Mode,
    cfg: &PipelineConfig,
    replies: &Replies,
    runs: usize,
) -> Result<CaseResult, Box<CaseAbort>> {
    let registry = ToolRegistry::standard();
    run_case(
        suite,
        mode,
        cfg,
        &registry,
        runs,
        |_, step| replies.backend(mode, step),
        &mut |run, step, trace| {
            tracing::info!(
                suite = %suite.name,
                run,
                step = step + 1,
                calls = trace.calls.len(),
                retries = trace.retries(),
                tokens_in = trace.total.tokens_in,
                "step done"
            );
        },
    )
}

pub fn results_path(dir: &Path, result: &CaseResult) -> PathBuf {
    dir.join(format!("{}-{}.json", result.suite, result.mode))
}

/// Writes `<dir>/<suite>-<mode>.json`.
pub fn save_results(dir: &Path, result: &CaseResult) -> Result<PathBuf, BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = results_path(dir, result);
    let text = serde_json::to_string_pretty(result).expect("results serialize");
    std::fs::write(&path, text + "\n").map_err(|source| BenchError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Reads one results file, or every `*.json` file of a directory in name
/// order. A file may hold a single case or an array of cases.
pub fn load_results(path: &Path) -> Result<Vec<CaseResult>, BenchError> {
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut all = Vec::new();
        for f in files {
            all.extend(load_results(&f)?);
        }
        return Ok(all);
    }
    let text = std::fs::read_to_string(path).map_err(io)?;
    let json = |source| BenchError::Json {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json)?;
    if value.is_array() {
        serde_json::from_value(value).map_err(json)
    } else {
        Ok(vec![serde_json::from_value(value).map_err(json)?])
    }
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Report, BenchError> {
    Ok(Report::compare(&load_results(a)?, &load_results(b)?)?)
}
