//! Text and JSON rendering of check reports, and replay of JSON reports.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{
    ActionLabel, Assignment, CheckReport, Schema, State, Stats, TransitionSystem, Value, Verdict,
    INITIAL_PREDICATE,
};

/// Human-readable report. Byte-deterministic apart from the elapsed-time
/// line.
pub fn render_text(report: &CheckReport) -> String {
    let mut out = String::new();
    match &report.verdict {
        Verdict::Pass => {
            out.push_str("Model checking completed. No error has been found.\n");
        }
        Verdict::LimitExceeded => {
            let _ = writeln!(
                out,
                "Exploration stopped: state limit reached after {} distinct states. \
                 Statistics are partial.",
                report.stats.distinct_states
            );
        }
        Verdict::Violation(trace) => {
            let _ = writeln!(
                out,
                "Error: Invariant {} is violated.",
                trace.violated_invariant
            );
            out.push_str("Error: The behavior up to this point is:\n");
            for (i, step) in trace.steps.iter().enumerate() {
                let label = step
                    .label
                    .as_ref()
                    .map_or_else(|| INITIAL_PREDICATE.to_owned(), ActionLabel::to_string);
                let _ = writeln!(out, "State {}: <{}>", i + 1, label);
                write_state(&mut out, &report.schema, &step.state);
                out.push('\n');
            }
        }
    }
    if !report.checked.is_empty() {
        let _ = writeln!(out, "Invariants checked: {}", report.checked.join(", "));
    }
    let Stats {
        distinct_states,
        transitions,
        diameter,
    } = report.stats;
    let partial = if report.verdict == Verdict::LimitExceeded {
        " (partial)"
    } else {
        ""
    };
    let _ = writeln!(
        out,
        "{distinct_states} distinct states found, {transitions} transitions, diameter {diameter}{partial}."
    );
    let _ = writeln!(out, "Elapsed: {} ms", report.elapsed.as_millis());
    out
}

fn write_state(out: &mut String, schema: &Schema, state: &State) {
    for (var, cells) in schema.rows(state) {
        let cells: Vec<String> = cells.iter().map(|(k, v)| format!("{k} |-> {v}")).collect();
        let _ = writeln!(out, "/\\ {var} = [{}]", cells.join(", "));
    }
}

type StateDoc = IndexMap<String, IndexMap<String, Value>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    /// `None` for the initial state.
    pub action: Option<String>,
    pub params: IndexMap<String, String>,
    pub state: StateDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub distinct_states: usize,
    pub transitions: usize,
    pub diameter: usize,
}

/// The machine-readable report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violated_invariant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
    pub stats: StatsDoc,
    pub elapsed_ms: u64,
}

impl ReportDocument {
    pub fn from_report(report: &CheckReport) -> Self {
        let verdict = match report.verdict {
            Verdict::Pass => "pass",
            Verdict::Violation(_) => "violation",
            Verdict::LimitExceeded => "limit_exceeded",
        };
        let trace = report.trace().map(|trace| {
            trace
                .steps
                .iter()
                .enumerate()
                .map(|(i, step)| TraceEntry {
                    step: i + 1,
                    action: step.label.as_ref().map(|l| l.action.clone()),
                    params: step
                        .label
                        .iter()
                        .flat_map(|l| l.params.iter().cloned())
                        .collect(),
                    state: report
                        .schema
                        .rows(&step.state)
                        .into_iter()
                        .map(|(var, cells)| {
                            let cells = cells
                                .into_iter()
                                .map(|(k, v)| (k.to_owned(), v.clone()))
                                .collect();
                            (var.to_owned(), cells)
                        })
                        .collect(),
                })
                .collect()
        });
        Self {
            verdict: verdict.into(),
            violated_invariant: report.trace().map(|t| t.violated_invariant.clone()),
            trace,
            stats: StatsDoc {
                distinct_states: report.stats.distinct_states,
                transitions: report.stats.transitions,
                diameter: report.stats.diameter,
            },
            elapsed_ms: u64::try_from(report.elapsed.as_millis()).unwrap_or(u64::MAX),
        }
    }
}

/// JSON report with a fixed key order.
pub fn render_structured(report: &CheckReport) -> String {
    let mut out = serde_json::to_string_pretty(&ReportDocument::from_report(report))
        .expect("report document is always serializable");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    /// Every step is a genuine successor and the last state violates the
    /// named invariant.
    Confirmed,
    /// The trace departs from the system at `step` (1-based, as numbered in
    /// the document).
    Diverged { step: usize, reason: String },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("report document is not valid: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("report document has no trace (verdict `{0}`)")]
    NoTrace(String),
    #[error("report document has no violated invariant")]
    NoInvariant,
    #[error("trace is empty")]
    EmptyTrace,
    #[error("the system has no invariant `{0}`")]
    UnknownInvariant(String),
}

/// Re-executes a JSON report's trace against `system`.
pub fn replay<T: TransitionSystem>(
    document: &str,
    system: &T,
) -> Result<ReplayOutcome, ReplayError> {
    let doc: ReportDocument = serde_json::from_str(document)?;
    let Some(trace) = doc.trace else {
        return Err(ReplayError::NoTrace(doc.verdict));
    };
    let invariant_name = doc.violated_invariant.ok_or(ReplayError::NoInvariant)?;
    let invariant = system
        .invariants()
        .iter()
        .find(|i| i.name() == invariant_name)
        .ok_or_else(|| ReplayError::UnknownInvariant(invariant_name.clone()))?;
    let (first, rest) = trace.split_first().ok_or(ReplayError::EmptyTrace)?;
    let schema = system.schema();
    let diverged = |step: usize, reason: String| Ok(ReplayOutcome::Diverged { step, reason });

    let expect_step = |entry: &TraceEntry, index: usize| -> Result<State, String> {
        if entry.step != index {
            return Err(format!(
                "step is numbered {} but appears at position {index}",
                entry.step
            ));
        }
        let assignment: Assignment = entry
            .state
            .iter()
            .map(|(var, cells)| {
                let cells = cells.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                (var.clone(), cells)
            })
            .collect();
        schema.encode(&assignment).map_err(|e| e.to_string())
    };

    if first.action.is_some() {
        return diverged(1, "first step must be the initial state".into());
    }
    let target = match expect_step(first, 1) {
        Ok(s) => s,
        Err(reason) => return diverged(1, reason),
    };
    let mut current = match system
        .initial_states()
        .into_iter()
        .find(|s| schema.encode(&system.assignment(s)).ok().as_ref() == Some(&target))
    {
        Some(s) => s,
        None => return diverged(1, "state is not an initial state".into()),
    };

    for (offset, entry) in rest.iter().enumerate() {
        let index = offset + 2;
        let target = match expect_step(entry, index) {
            Ok(s) => s,
            Err(reason) => return diverged(index, reason),
        };
        let Some(action) = &entry.action else {
            return diverged(index, "step has no action".into());
        };
        let label = ActionLabel {
            action: action.clone(),
            params: entry
                .params
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        // JSON objects are unordered, so params match by name
        let matches = |l: &ActionLabel| {
            l.action == label.action
                && l.params.len() == label.params.len()
                && l.params.iter().all(|(k, v)| entry.params.get(k) == Some(v))
        };
        let successor = system
            .successors(&current)
            .into_iter()
            .find(|(l, _)| matches(l));
        let Some((_, next)) = successor else {
            return diverged(index, format!("action {label} is not enabled"));
        };
        if schema.encode(&system.assignment(&next)).ok().as_ref() != Some(&target) {
            return diverged(index, format!("state does not match the result of {label}"));
        }
        current = next;
    }

    if invariant.holds(&current) {
        return diverged(
            trace.len(),
            format!("final state satisfies {invariant_name}"),
        );
    }
    Ok(ReplayOutcome::Confirmed)
}
