use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use freyr::bench::{compare_files, load_results, run_suite, save_results, Replies};
use freyr::config::{BackendKind, FreyrConfig};
use freyr::service::{serve, AppState};
use freyr::suite::{bundled, load_suite};
use freyr::{OllamaBackend, ScriptBook, ScriptedBackend};
use freyr_core::bench::report::{render_table, Report};
use freyr_core::tools::{registry, render_intent_catalog, render_json_schema};
use freyr_core::{count_tokens, ChatBackend, Mode};

/// GPT-2 token count of the schema used in the original experiments.
const REFERENCE_SCHEMA_TOKENS: u64 = 3933;

#[derive(Parser)]
#[command(
    name = "freyr",
    version,
    about = "Modular LLM tool-usage pipeline for dungeon level editing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark suite and write `<out>/<suite>-<mode>.json`.
    Bench {
        /// Suite file, or the name of a bundled suite (T1..T5).
        #[arg(long)]
        suite: String,
        #[arg(long, default_value = "freyr")]
        mode: Mode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Reply script for the scripted backend. Bundled suites bring their own.
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Compare two sets of results with paired Wilcoxon tests.
    Stats {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: Option<PathBuf>,
        /// Also write the report JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-render a report JSON written by `stats --json`.
    Table { report: PathBuf },
    /// Print the function-calling schema.
    Schema {
        /// Also print approximate token counts.
        #[arg(long)]
        tokens: bool,
    },
    /// Serve interactive sessions over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for per-session JSON snapshots.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<FreyrConfig> {
    match path {
        Some(p) => Ok(FreyrConfig::load(p)?),
        None => Ok(FreyrConfig::default()),
    }
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(env_filter())
        .init();
    match Cli::parse().command {
        Command::Bench {
            suite,
            mode,
            config,
            runs,
            out,
            script,
        } => {
            let fc = load_config(config.as_ref())?;
            let cfg = fc.pipeline()?;
            let path = PathBuf::from(&suite);
            let (suite, bundled_script) = if path.exists() {
                (load_suite(&path)?, None)
            } else {
                let (s, b) = bundled(&suite)
                    .with_context(|| format!("no suite file or bundled suite '{suite}'"))?;
                (s, Some(b))
            };
            let script = match script.or(fc.script.clone()) {
                Some(p) => Some(ScriptBook::load(&p)?),
                None => bundled_script,
            };
            let replies = Replies::from_config(&fc, script)?;
            let result = match run_suite(&suite, mode, &cfg, &replies, runs) {
                Ok(r) => r,
                Err(abort) => {
                    let saved = save_results(&out, &abort.partial)?;
                    bail!("{abort} (partial results in {})", saved.display());
                }
            };
            let saved = save_results(&out, &result)?;
            print!("{}", render_table(&Report::summarize(&[result])));
            println!("Results written to {}", saved.display());
        }
        Command::Stats { a, b, json } => {
            let report = match b {
                Some(b) => compare_files(&a, &b)?,
                None => Report::summarize(&load_results(&a)?),
            };
            if let Some(p) = json {
                std::fs::write(&p, report.to_json() + "\n")
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{}", render_table(&report));
        }
        Command::Table { report } => {
            let text = std::fs::read_to_string(&report)
                .with_context(|| format!("reading {}", report.display()))?;
            print!("{}", render_table(&Report::from_json(&text)?));
        }
        Command::Schema { tokens } => {
            let reg = registry();
            let schema = render_json_schema(&reg);
            println!("{schema}");
            if tokens {
                let catalog = render_intent_catalog(&reg);
                println!(
                    "schema: {} tools, {} approximate tokens (reference: {REFERENCE_SCHEMA_TOKENS} GPT-2 tokens for the original schema)",
                    reg.len(),
                    count_tokens(&schema)
                );
                println!(
                    "intent catalog: {} approximate tokens",
                    count_tokens(&catalog)
                );
            }
        }
        Command::Serve {
            addr,
            config,
            snapshots,
        } => {
            let fc = load_config(config.as_ref())?;
            fc.pipeline()?;
            let backend: Arc<dyn ChatBackend> = match fc.backend {
                BackendKind::Ollama => Arc::new(OllamaBackend::default()),
                BackendKind::Scripted => {
                    let p = fc
                        .script
                        .as_ref()
                        .context("the scripted backend needs `script` in the config")?;
                    let book = ScriptBook::load(p)?;
                    Arc::new(ScriptedBackend::new(
                        book.steps(Mode::Freyr).iter().flatten().cloned(),
                    ))
                }
            };
            let mut state = AppState::new(backend, fc);
            if let Some(dir) = snapshots {
                state = state.with_snapshots(dir);
            }
            tokio::runtime::Runtime::new()?.block_on(serve(&addr, Arc::new(state)))?;
        }
    }
    Ok(())
}

fn env_filter() -> tracing_subscriber::EnvFilter {
    tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"))
}
