//! Runtime around `freyr-core`: an Ollama client, a scripted backend for
//! tests, TOML configuration, bundled benchmark suites, the benchmark
//! runner and an HTTP session service.

pub mod bench;
pub mod config;
pub mod ollama;
pub mod scripted;
pub mod service;
pub mod suite;

pub use config::{BackendKind, ConfigError, FreyrConfig};
pub use ollama::OllamaBackend;
pub use scripted::{ScriptedBackend, ScriptedReply};
pub use suite::{load_suite, ScriptBook, SuiteError};
