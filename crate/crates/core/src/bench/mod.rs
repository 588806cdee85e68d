//! Benchmark cases, per-step design checks, case runs, statistics and
//! report tables.

pub mod report;
pub mod run;
pub mod stats;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dungeon::{diff, validate_domain, DiffEntry, Dungeon, EditDiff, EntityKind};
use crate::text::glob_match;

pub use run::{aggregate_run, run_case, CaseResult, RunAggregate, RunRecord, StepResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub steps: Vec<StepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub request: String,
    pub start_level: Dungeon,
    pub check: CheckExpr,
}

impl TestSuite {
    /// Every start level must be domain-valid.
    pub fn validate(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err(format!("suite '{}' has no steps", self.name));
        }
        for (i, step) in self.steps.iter().enumerate() {
            let report = validate_domain(&step.start_level);
            if !report.is_empty() {
                return Err(format!("step {}: start level is invalid: {report}", i + 1));
            }
            if step.request.trim().is_empty() {
                return Err(format!("step {}: empty request", i + 1));
            }
        }
        Ok(())
    }
}

/// How many diff entries a predicate must match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Exactly(usize),
    AtLeast { min: usize },
}

impl Default for Count {
    fn default() -> Self {
        Count::AtLeast { min: 1 }
    }
}

impl Count {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Count::Exactly(k) => n == k,
            Count::AtLeast { min } => n >= min,
        }
    }
}

fn any_area() -> String {
    "*".into()
}

/// Selects diff entries of one kind. `area` and `name` are case-insensitive
/// globs over the entry's area path (`room:Rome`, `corridor:A<->B`,
/// `room:Hell/enemy:Angel`) and name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub kind: EntityKind,
    #[serde(default = "any_area")]
    pub area: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub count: Count,
    /// Modified entries only: changed fields must be a subset of these.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<BTreeSet<String>>,
}

impl Match {
    pub fn new(kind: EntityKind, area: &str) -> Self {
        Self {
            kind,
            area: area.into(),
            name: None,
            count: Count::default(),
            fields: None,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn count(mut self, count: usize) -> Self {
        self.count = Count::Exactly(count);
        self
    }

    pub fn at_least(mut self, min: usize) -> Self {
        self.count = Count::AtLeast { min };
        self
    }

    pub fn fields(mut self, fields: &[&str]) -> Self {
        self.fields = Some(fields.iter().map(|f| String::from(*f)).collect());
        self
    }

    fn selects(&self, e: &DiffEntry) -> bool {
        e.kind == self.kind
            && glob_match(&self.area, &e.area.to_string())
            && self.name.as_deref().is_none_or(|n| glob_match(n, &e.name))
            && self
                .fields
                .as_ref()
                .is_none_or(|allowed| !e.fields.is_empty() && e.fields.is_subset(allowed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Added(Match),
    Removed(Match),
    Modified(Match),
    /// Every diff entry is selected by some other predicate.
    NoOtherChanges,
}

/// A conjunction of predicates over `diff(before, after)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CheckExpr(pub Vec<Predicate>);

impl CheckExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn added(mut self, m: Match) -> Self {
        self.0.push(Predicate::Added(m));
        self
    }

    pub fn removed(mut self, m: Match) -> Self {
        self.0.push(Predicate::Removed(m));
        self
    }

    pub fn modified(mut self, m: Match) -> Self {
        self.0.push(Predicate::Modified(m));
        self
    }

    pub fn only(mut self) -> Self {
        self.0.push(Predicate::NoOtherChanges);
        self
    }

    pub fn holds(&self, d: &EditDiff) -> bool {
        let mut claimed = [
            alloc::vec![false; d.added.len()],
            alloc::vec![false; d.removed.len()],
            alloc::vec![false; d.modified.len()],
        ];
        let mut exclusive = false;
        for p in &self.0 {
            let (m, list, slot) = match p {
                Predicate::Added(m) => (m, &d.added, 0),
                Predicate::Removed(m) => (m, &d.removed, 1),
                Predicate::Modified(m) => (m, &d.modified, 2),
                Predicate::NoOtherChanges => {
                    exclusive = true;
                    continue;
                }
            };
            let mut n = 0;
            for (i, e) in list.iter().enumerate() {
                if m.selects(e) {
                    n += 1;
                    claimed[slot][i] = true;
                }
            }
            if !m.count.accepts(n) {
                return false;
            }
        }
        !exclusive || claimed.iter().flatten().all(|c| *c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCheck {
    pub domain_valid: bool,
    pub design_valid: bool,
}

impl StepCheck {
    pub fn success(self) -> bool {
        self.domain_valid && self.design_valid
    }
}

pub fn check_step(before: &Dungeon, after: &Dungeon, check: &CheckExpr) -> StepCheck {
    StepCheck {
        domain_valid: validate_domain(after).is_empty(),
        design_valid: check.holds(&diff(before, after)),
    }
}
