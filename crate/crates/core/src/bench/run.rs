//! Running a suite step by step and the per-run aggregates.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_step, TestSuite};
use crate::backend::{ChatBackend, Message};
use crate::pipeline::{run_mode, Mode, PipelineConfig, PipelineTrace};
use crate::tools::ToolRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    /// 1-based.
    pub step: usize,
    pub success: bool,
    pub domain_valid: bool,
    pub design_valid: bool,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub seconds: f64,
    pub retries: u32,
    pub calls: usize,
    #[serde(default)]
    pub intent_fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub steps: Vec<StepResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub suite: String,
    pub mode: Mode,
    pub model: String,
    pub steps_total: usize,
    pub runs: Vec<RunRecord>,
}

/// Per-run means over the steps of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub steps_pct: f64,
    pub tokens_in: f64,
    pub tokens_out: f64,
    pub seconds: f64,
}

pub fn aggregate_run(run: &RunRecord) -> RunAggregate {
    let n = run.steps.len().max(1) as f64;
    let ok = run.steps.iter().filter(|s| s.success).count() as f64;
    RunAggregate {
        steps_pct: 100.0 * ok / n,
        tokens_in: run.steps.iter().map(|s| s.tokens_in as f64).sum::<f64>() / n,
        tokens_out: run.steps.iter().map(|s| s.tokens_out as f64).sum::<f64>() / n,
        seconds: run.steps.iter().map(|s| s.seconds).sum::<f64>() / n,
    }
}

impl CaseResult {
    pub fn aggregates(&self) -> Vec<RunAggregate> {
        self.runs.iter().map(aggregate_run).collect()
    }

    pub fn successes(&self, run: usize) -> usize {
        self.runs
            .get(run)
            .map_or(0, |r| r.steps.iter().filter(|s| s.success).count())
    }
}

fn step_result(step: usize, trace: &PipelineTrace) -> StepResult {
    StepResult {
        step,
        success: false,
        domain_valid: false,
        design_valid: false,
        tokens_in: trace.total.tokens_in,
        tokens_out: trace.total.tokens_out,
        seconds: trace.total.wall_time,
        retries: trace.retries(),
        calls: trace.calls.len(),
        intent_fallback: trace.intent_fallback,
        aborted: None,
    }
}

/// A transport failure stopped the case. `partial` holds every finished
/// step, including the aborted one.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("case '{}' aborted at run {run}, step {step}: {error}", partial.suite)]
pub struct CaseAbort {
    pub run: usize,
    pub step: usize,
    pub error: String,
    pub partial: CaseResult,
}

/// Runs every step of `suite` from its own start level, `runs` times. A
/// failing step never stops the run. `backend_for(run, step)` supplies the
/// backend for each step (0-based indices); `observe` sees every trace.
#[allow(clippy::too_many_arguments)]
pub fn run_case<B, F>(
    suite: &TestSuite,
    mode: Mode,
    cfg: &PipelineConfig,
    registry: &ToolRegistry,
    runs: usize,
    mut backend_for: F,
    observe: &mut dyn FnMut(usize, usize, &PipelineTrace),
) -> Result<CaseResult, Box<CaseAbort>>
where
    B: ChatBackend,
    F: FnMut(usize, usize) -> B,
{
    let mut result = CaseResult {
        suite: suite.name.clone(),
        mode,
        model: cfg.parameters.options.model.clone(),
        steps_total: suite.steps.len(),
        runs: Vec::with_capacity(runs),
    };
    for run in 0..runs {
        let mut record = RunRecord {
            run,
            steps: Vec::with_capacity(suite.steps.len()),
        };
        let mut conversation: Vec<Message> = Vec::new();
        for (i, step) in suite.steps.iter().enumerate() {
            let backend = backend_for(run, i);
            let out = run_mode(
                mode,
                cfg,
                registry,
                &backend,
                &conversation,
                &step.request,
                &step.start_level,
                &mut |_| {},
            );
            match out {
                Ok(out) => {
                    observe(run, i, &out.trace);
                    let check = check_step(&step.start_level, &out.level, &step.check);
                    let mut r = step_result(i + 1, &out.trace);
                    r.domain_valid = check.domain_valid;
                    r.design_valid = check.design_valid;
                    r.success = check.success();
                    record.steps.push(r);
                    conversation.push(Message::user(step.request.clone()));
                    conversation.push(Message::assistant(out.response));
                }
                Err(abort) => {
                    observe(run, i, &abort.trace);
                    let mut r = step_result(i + 1, &abort.trace);
                    r.aborted = Some(abort.error.to_string());
                    record.steps.push(r);
                    result.runs.push(record);
                    return Err(Box::new(CaseAbort {
                        run,
                        step: i + 1,
                        error: abort.error.to_string(),
                        partial: result,
                    }));
                }
            }
        }
        result.runs.push(record);
    }
    Ok(result)
}
