//! Breadth-first exhaustive exploration.
//!
//! The frontier is processed one depth level at a time. Successor generation
//! for a level may run on a worker pool, but results are merged strictly in
//! frontier order, so reports are identical to a plain FIFO search: initial
//! states in declared order, successors in the model's action order.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::state::{DomainError, Schema, State};
use super::system::{ActionLabel, Invariant, TransitionSystem};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

/// Label used for the first step of every trace.
pub const INITIAL_PREDICATE: &str = "Initial predicate";

/// Maps each visited state to the edge that first discovered it; `None` marks
/// an initial state.
pub type Predecessors = HashMap<State, Option<(State, ActionLabel)>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    pub max_states: usize,
    /// Invariants to check, by name. `None` checks every declared invariant;
    /// an empty list disables invariant checking.
    pub invariants: Option<Vec<String>>,
    /// Size of the worker pool used to expand each frontier level. `1` runs
    /// everything on the calling thread.
    pub workers: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            max_states: DEFAULT_MAX_STATES,
            invariants: None,
            workers: 1,
        }
    }
}

impl CheckOptions {
    pub fn only(invariants: &[&str]) -> Self {
        Self {
            invariants: Some(invariants.iter().map(|s| s.to_string()).collect()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub distinct_states: usize,
    /// Successor edges generated from expanded states, self-loops and edges
    /// to already-visited states included.
    pub transitions: usize,
    /// Largest breadth-first depth of any state entered into the frontier.
    pub diameter: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// `None` for the initial state.
    pub label: Option<ActionLabel>,
    pub state: State,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    pub violated_invariant: String,
}

impl Trace {
    /// Number of labeled (action) steps.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> impl Iterator<Item = &ActionLabel> {
        self.steps.iter().filter_map(|s| s.label.as_ref())
    }

    pub fn last_state(&self) -> &State {
        &self
            .steps
            .last()
            .expect("trace has at least one state")
            .state
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Violation(Trace),
    LimitExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub stats: Stats,
    pub elapsed: Duration,
    /// Invariants that were evaluated, in evaluation order.
    pub checked: Vec<String>,
    pub schema: Schema,
}

impl CheckReport {
    pub fn trace(&self) -> Option<&Trace> {
        match &self.verdict {
            Verdict::Violation(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("invalid check options: {0}")]
    InvalidOptions(String),
    #[error("the system has no initial states")]
    NoInitialStates,
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
    #[error("model integrity: state produced by {label} is malformed: {source}")]
    ModelIntegrity {
        label: String,
        #[source]
        source: DomainError,
    },
    #[error("predecessor map is inconsistent: {0}")]
    InconsistentPredecessors(String),
    #[error("state limit of {} exceeded", .stats.distinct_states)]
    LimitExceeded { stats: Stats },
}

/// Exhaustively explores `system`, checking the selected invariants on every
/// state as it is dequeued. Stops at the first violating state.
pub fn check<T>(system: &T, options: &CheckOptions) -> Result<CheckReport, CheckError>
where
    T: TransitionSystem + Sync,
{
    let start = Instant::now();
    let invariants = select_invariants(system, options)?;
    let checked = invariants.iter().map(|i| i.name().to_owned()).collect();
    let (verdict, stats) = explore(system, &invariants, options, None)?;
    Ok(CheckReport {
        verdict,
        stats,
        elapsed: start.elapsed(),
        checked,
        schema: system.schema().clone(),
    })
}

/// Counts the reachable state space without evaluating any invariant.
pub fn reachable_stats<T>(system: &T, max_states: usize) -> Result<Stats, CheckError>
where
    T: TransitionSystem + Sync,
{
    let options = CheckOptions {
        max_states,
        invariants: Some(Vec::new()),
        workers: 1,
    };
    match explore(system, &[], &options, None)? {
        (Verdict::LimitExceeded, stats) => Err(CheckError::LimitExceeded { stats }),
        (_, stats) => Ok(stats),
    }
}

/// Every reachable state's encoding, in breadth-first discovery order.
pub fn reachable_states<T>(system: &T, max_states: usize) -> Result<Vec<State>, CheckError>
where
    T: TransitionSystem + Sync,
{
    let options = CheckOptions {
        max_states,
        invariants: Some(Vec::new()),
        workers: 1,
    };
    let mut visited = Vec::new();
    match explore(system, &[], &options, Some(&mut visited))? {
        (Verdict::LimitExceeded, stats) => Err(CheckError::LimitExceeded { stats }),
        _ => Ok(visited),
    }
}

/// Walks the predecessor tree from `violating` back to its root.
pub fn reconstruct_trace(
    predecessors: &Predecessors,
    violating: &State,
    invariant_name: &str,
) -> Result<Trace, CheckError> {
    let mut steps = Vec::new();
    let mut current = violating.clone();
    loop {
        let entry = predecessors.get(&current).ok_or_else(|| {
            CheckError::InconsistentPredecessors(format!("state {current:?} is not recorded"))
        })?;
        match entry {
            None => {
                steps.push(TraceStep {
                    label: None,
                    state: current,
                });
                break;
            }
            Some((parent, label)) => {
                steps.push(TraceStep {
                    label: Some(label.clone()),
                    state: current,
                });
                current = parent.clone();
            }
        }
        if steps.len() > predecessors.len() {
            return Err(CheckError::InconsistentPredecessors(
                "predecessor chain contains a cycle".into(),
            ));
        }
    }
    steps.reverse();
    Ok(Trace {
        steps,
        violated_invariant: invariant_name.to_owned(),
    })
}

fn select_invariants<'a, T: TransitionSystem>(
    system: &'a T,
    options: &CheckOptions,
) -> Result<Vec<&'a Invariant<T::State>>, CheckError> {
    let declared = system.invariants();
    match &options.invariants {
        None => Ok(declared.iter().collect()),
        Some(names) => names
            .iter()
            .map(|name| {
                declared
                    .iter()
                    .find(|i| i.name() == name)
                    .ok_or_else(|| CheckError::UnknownInvariant(name.clone()))
            })
            .collect(),
    }
}

struct Node<S> {
    typed: S,
    encoded: State,
}

/// Outcome of processing one dequeued state.
enum Expansion<S> {
    Violated(usize),
    Successors(Result<Vec<(ActionLabel, Node<S>)>, CheckError>),
}

fn expand_one<T: TransitionSystem>(
    system: &T,
    invariants: &[&Invariant<T::State>],
    node: &Node<T::State>,
) -> Expansion<T::State> {
    if let Some(i) = invariants.iter().position(|inv| !inv.holds(&node.typed)) {
        return Expansion::Violated(i);
    }
    let successors = system
        .successors(&node.typed)
        .into_iter()
        .map(|(label, typed)| {
            let encoded = system
                .schema()
                .encode(&system.assignment(&typed))
                .map_err(|source| CheckError::ModelIntegrity {
                    label: label.to_string(),
                    source,
                })?;
            Ok((label, Node { typed, encoded }))
        })
        .collect();
    Expansion::Successors(successors)
}

fn explore<T>(
    system: &T,
    invariants: &[&Invariant<T::State>],
    options: &CheckOptions,
    mut visited: Option<&mut Vec<State>>,
) -> Result<(Verdict, Stats), CheckError>
where
    T: TransitionSystem + Sync,
{
    if options.max_states == 0 {
        return Err(CheckError::InvalidOptions(
            "max_states must be at least 1".into(),
        ));
    }
    if options.workers == 0 {
        return Err(CheckError::InvalidOptions(
            "workers must be at least 1".into(),
        ));
    }
    let pool = if options.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(options.workers)
                .build()
                .map_err(|e| CheckError::InvalidOptions(e.to_string()))?,
        )
    } else {
        None
    };

    let initial = system.initial_states();
    if initial.is_empty() {
        return Err(CheckError::NoInitialStates);
    }

    let mut stats = Stats::default();
    let mut predecessors = Predecessors::new();
    let mut frontier = Vec::new();
    for typed in initial {
        let encoded = system
            .schema()
            .encode(&system.assignment(&typed))
            .map_err(|source| CheckError::ModelIntegrity {
                label: INITIAL_PREDICATE.into(),
                source,
            })?;
        if predecessors.contains_key(&encoded) {
            continue;
        }
        if predecessors.len() >= options.max_states {
            stats.distinct_states = predecessors.len();
            return Ok((Verdict::LimitExceeded, stats));
        }
        predecessors.insert(encoded.clone(), None);
        if let Some(v) = visited.as_deref_mut() {
            v.push(encoded.clone());
        }
        frontier.push(Node { typed, encoded });
    }

    let mut depth = 0;
    while !frontier.is_empty() {
        let expansions: Vec<Expansion<T::State>> = match &pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                frontier
                    .par_iter()
                    .map(|node| expand_one(system, invariants, node))
                    .collect()
            }),
            None => frontier
                .iter()
                .map(|node| expand_one(system, invariants, node))
                .collect(),
        };

        let mut next = Vec::new();
        for (node, expansion) in frontier.iter().zip(expansions) {
            let successors = match expansion {
                Expansion::Violated(i) => {
                    stats.distinct_states = predecessors.len();
                    let trace =
                        reconstruct_trace(&predecessors, &node.encoded, invariants[i].name())?;
                    return Ok((Verdict::Violation(trace), stats));
                }
                Expansion::Successors(result) => result?,
            };
            for (label, succ) in successors {
                stats.transitions += 1;
                if predecessors.contains_key(&succ.encoded) {
                    continue;
                }
                if predecessors.len() >= options.max_states {
                    stats.distinct_states = predecessors.len();
                    return Ok((Verdict::LimitExceeded, stats));
                }
                predecessors.insert(succ.encoded.clone(), Some((node.encoded.clone(), label)));
                if let Some(v) = visited.as_deref_mut() {
                    v.push(succ.encoded.clone());
                }
                stats.diameter = depth + 1;
                next.push(succ);
            }
        }
        frontier = next;
        depth += 1;
    }

    stats.distinct_states = predecessors.len();
    Ok((Verdict::Pass, stats))
}
