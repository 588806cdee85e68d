//! Core of the FREYR tool-usage pipeline.
//!
//! Everything in this crate is pure computation over owned values: the
//! dungeon level model and its validity rules, the sixteen level-editing
//! tools, the four-role pipeline and the native function-calling baseline
//! (both generic over a [`backend::ChatBackend`]), and the benchmark
//! checks and statistics. IO, HTTP and timing live in the `freyr` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backend;
pub mod baseline;
pub mod bench;
pub mod dungeon;
pub mod pipeline;
pub mod tools;

mod text;

pub use backend::{
    count_prompt_tokens, count_tokens, BackendError, ChatBackend, Completion, GenerationOptions,
    Message, MessageRole, Role, RoleConfig, ToolCall, ToolReply, UsageRecord,
};
pub use dungeon::{DomainLimits, Dungeon, EditDiff, ValidationReport};
pub use pipeline::{Mode, PipelineConfig, PipelineEvent, PipelineTrace, StepOutput};
pub use tools::{ParamSet, ParamValue, ToolOutcome, ToolRegistry, ToolSpec};
