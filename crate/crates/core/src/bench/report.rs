//! Result tables: per (case, model, mode) mean ± half-width for steps,
//! tokens and time, with daggers for significant paired differences.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::run::{CaseResult, RunAggregate};
use super::stats::{bonferroni, mean_interval, wilcoxon_signed_rank, StatsError};
use crate::pipeline::Mode;

pub const CONFIDENCE: f64 = 0.95;
pub const ALPHA: f64 = 0.05;
pub const INTERVAL_LABEL: &str = "95% Student-t interval of the mean over runs (frequentist)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Steps,
    TokensIn,
    TokensOut,
    Seconds,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Steps,
        Metric::TokensIn,
        Metric::TokensOut,
        Metric::Seconds,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Metric::Steps => "Steps (%)",
            Metric::TokensIn => "Tokens_in",
            Metric::TokensOut => "Tokens_out",
            Metric::Seconds => "Time (s)",
        }
    }

    pub fn of(self, a: &RunAggregate) -> f64 {
        match self {
            Metric::Steps => a.steps_pct,
            Metric::TokensIn => a.tokens_in,
            Metric::TokensOut => a.tokens_out,
            Metric::Seconds => a.seconds,
        }
    }

    fn higher_is_better(self) -> bool {
        matches!(self, Metric::Steps)
    }

    fn decimals(self) -> usize {
        match self {
            Metric::Steps => 1,
            Metric::TokensIn | Metric::TokensOut => 0,
            Metric::Seconds => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub half_width: Option<f64>,
    pub dagger: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub case: String,
    pub model: String,
    pub mode: Mode,
    pub runs: usize,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub case: String,
    pub metric: Metric,
    /// Row indices of the two sides.
    pub a: usize,
    pub b: usize,
    pub n: usize,
    pub w_plus: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub interval: String,
    pub rows: Vec<ReportRow>,
    pub comparisons: Vec<Comparison>,
}

fn row_of(r: &CaseResult) -> ReportRow {
    let aggs = r.aggregates();
    let cells = Metric::ALL
        .iter()
        .map(|m| {
            let xs: Vec<f64> = aggs.iter().map(|a| m.of(a)).collect();
            let iv = mean_interval(&xs, CONFIDENCE);
            Cell {
                mean: iv.map_or(0.0, |i| i.mean),
                half_width: iv.and_then(|i| i.half_width),
                dagger: false,
            }
        })
        .collect();
    ReportRow {
        case: r.suite.clone(),
        model: r.model.clone(),
        mode: r.mode,
        runs: r.runs.len(),
        cells,
    }
}

impl Report {
    /// Rows only, no comparisons.
    pub fn summarize(results: &[CaseResult]) -> Report {
        Report {
            interval: INTERVAL_LABEL.into(),
            rows: results.iter().map(row_of).collect(),
            comparisons: Vec::new(),
        }
    }

    /// Rows for both sides, plus one paired comparison per metric for every
    /// case present in both. Pairs are per-run aggregates matched by run
    /// index; the Bonferroni family is every comparison in the report.
    pub fn compare(a: &[CaseResult], b: &[CaseResult]) -> Result<Report, StatsError> {
        let mut rows = Vec::new();
        let mut comparisons = Vec::new();
        let mut b_used = alloc::vec![false; b.len()];
        for ra in a {
            let ia = rows.len();
            rows.push(row_of(ra));
            let Some(jb) = b.iter().position(|rb| rb.suite == ra.suite) else {
                continue;
            };
            b_used[jb] = true;
            let rb = &b[jb];
            let ib = rows.len();
            rows.push(row_of(rb));
            let (xa, xb) = (ra.aggregates(), rb.aggregates());
            for m in Metric::ALL {
                let x: Vec<f64> = xa.iter().map(|g| m.of(g)).collect();
                let y: Vec<f64> = xb.iter().map(|g| m.of(g)).collect();
                let w = wilcoxon_signed_rank(&x, &y)?;
                comparisons.push(Comparison {
                    case: ra.suite.clone(),
                    metric: m,
                    a: ia,
                    b: ib,
                    n: w.n,
                    w_plus: w.w_plus,
                    p_value: w.p_value,
                    p_adjusted: w.p_value,
                    significant: false,
                });
            }
        }
        for (rb, used) in b.iter().zip(&b_used) {
            if !used {
                rows.push(row_of(rb));
            }
        }
        let raw: Vec<f64> = comparisons.iter().map(|c| c.p_value).collect();
        for (c, adj) in comparisons.iter_mut().zip(bonferroni(&raw)) {
            c.p_adjusted = adj;
            c.significant = adj < ALPHA;
        }
        for c in &comparisons {
            if !c.significant {
                continue;
            }
            let k = Metric::ALL
                .iter()
                .position(|m| *m == c.metric)
                .expect("metric");
            let (ma, mb) = (rows[c.a].cells[k].mean, rows[c.b].cells[k].mean);
            let a_better = if c.metric.higher_is_better() {
                ma > mb
            } else {
                ma < mb
            };
            let winner = if a_better { c.a } else { c.b };
            rows[winner].cells[k].dagger = true;
        }
        Ok(Report {
            interval: INTERVAL_LABEL.into(),
            rows,
            comparisons,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn fmt_cell(m: Metric, c: &Cell) -> String {
    let d = m.decimals();
    let hw = match c.half_width {
        Some(h) => format!("{h:.d$}"),
        None => "n/a".into(),
    };
    let dagger = if c.dagger { "†" } else { "" };
    format!("{:.d$} ± {hw}{dagger}", c.mean)
}

fn push_row(out: &mut String, cols: &[String], widths: &[usize]) {
    let mut line = String::new();
    for (i, (c, w)) in cols.iter().zip(widths).enumerate() {
        if i > 0 {
            line.push_str(" | ");
        }
        line.push_str(c);
        for _ in c.chars().count()..*w {
            line.push(' ');
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Aligned text table. Depends only on the report, so a report reloaded
/// from JSON renders the same bytes.
pub fn render_table(report: &Report) -> String {
    let mut header: Vec<String> = ["Case", "Model", "Mode"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(Metric::ALL.iter().map(|m| m.header().to_string()));
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut cols = alloc::vec![r.case.clone(), r.model.clone(), r.mode.to_string()];
            cols.extend(
                Metric::ALL
                    .iter()
                    .zip(&r.cells)
                    .map(|(m, c)| fmt_cell(*m, c)),
            );
            cols
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            body.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    push_row(&mut out, &header, &widths);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    push_row(&mut out, &rule, &widths);
    for r in &body {
        push_row(&mut out, r, &widths);
    }
    let _ = writeln!(out, "\nIntervals: {}.", report.interval);
    if !report.comparisons.is_empty() {
        let _ = writeln!(
            out,
            "† Wilcoxon signed-rank on per-run means, Bonferroni-adjusted p < {ALPHA} over {} comparisons:",
            report.comparisons.len()
        );
        for c in &report.comparisons {
            let mark = if c.significant { " †" } else { "" };
            let _ = writeln!(
                out,
                "  {} {} ({} vs {}): n={} W+={} p={:.4} adjusted={:.4}{mark}",
                c.case,
                c.metric.header(),
                report.rows[c.a].mode,
                report.rows[c.b].mode,
                c.n,
                c.w_plus,
                c.p_value,
                c.p_adjusted
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::run::{RunRecord, StepResult};

    fn step(success: bool, tokens_in: u64, seconds: f64) -> StepResult {
        StepResult {
            step: 1,
            success,
            domain_valid: success,
            design_valid: success,
            tokens_in,
            tokens_out: 10,
            seconds,
            retries: 0,
            calls: 3,
            intent_fallback: false,
            aborted: None,
        }
    }

    fn case(mode: Mode, tokens: u64, runs: usize) -> CaseResult {
        CaseResult {
            suite: "T1".into(),
            mode,
            model: "m".into(),
            steps_total: 2,
            runs: (0..runs)
                .map(|run| RunRecord {
                    run,
                    steps: alloc::vec![
                        step(true, tokens + run as u64, 1.0),
                        step(run % 2 == 0, tokens, 2.0)
                    ],
                })
                .collect(),
        }
    }

    #[test]
    fn two_modes_one_case() {
        let r =
            Report::compare(&[case(Mode::Freyr, 100, 10)], &[case(Mode::Tools, 900, 10)]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.cells.len() == 4));
        assert_eq!(r.comparisons.len(), 4);
        let tokens = &r.comparisons[1];
        assert_eq!(tokens.metric, Metric::TokensIn);
        // 10 pairs all negative: exact p = 2/1024, adjusted x4.
        assert_eq!(tokens.p_value, 2.0 / 1024.0);
        assert_eq!(tokens.p_adjusted, 8.0 / 1024.0);
        assert!(r.rows[0].cells[1].dagger);
        assert!(!r.rows[1].cells[1].dagger);
        // Identical step rates: degenerate, no dagger.
        assert!(!r.comparisons[0].significant);
        let table = render_table(&r);
        assert!(table.contains("Tokens_in"));
        assert!(table.contains("†"));
        let again = Report::from_json(&r.to_json()).unwrap();
        assert_eq!(render_table(&again), table);
    }

    #[test]
    fn single_run_has_no_interval() {
        let r = Report::summarize(&[case(Mode::Freyr, 100, 1)]);
        assert_eq!(r.rows[0].cells[0].half_width, None);
        assert!(render_table(&r).contains("± n/a"));
    }
}
