//! Generic explicit-state exploration for finite labeled transition systems.

mod explore;
mod state;
mod system;

pub use explore::{
    check, reachable_states, reachable_stats, reconstruct_trace, CheckError, CheckOptions,
    CheckReport, Predecessors, Stats, Trace, TraceStep, Verdict, DEFAULT_MAX_STATES,
    INITIAL_PREDICATE,
};
pub use state::{Assignment, DomainError, Schema, SchemaError, State, Value, VarDecl};
pub use system::{ActionLabel, Invariant, TransitionSystem};
