use std::fmt;

use super::state::{Assignment, Schema};

/// Name and parameters of one atomic action firing, e.g. `Ask(a1, NOR)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionLabel {
    pub action: String,
    pub params: Vec<(String, String)>,
}

impl ActionLabel {
    pub fn new(action: impl Into<String>) -> Self {
        Self {
            action: action.into(),
            params: Vec::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.push((name.into(), value.into()));
        self
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.action)?;
        if !self.params.is_empty() {
            f.write_str("(")?;
            for (i, (_, value)) in self.params.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(value)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

type Predicate<S> = Box<dyn Fn(&S) -> bool + Send + Sync>;

/// A named state predicate that must hold in every reachable state.
pub struct Invariant<S> {
    name: String,
    predicate: Predicate<S>,
}

impl<S> Invariant<S> {
    pub fn new(
        name: impl Into<String>,
        predicate: impl Fn(&S) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            predicate: Box::new(predicate),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, state: &S) -> bool {
        (self.predicate)(state)
    }
}

impl<S> fmt::Debug for Invariant<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Invariant")
            .field("name", &self.name)
            .finish()
    }
}

/// A finite labeled transition system the explorer can check.
///
/// `successors` must be deterministic: the same state yields the same
/// ordered list on every call. Every state the system produces must lower
/// (via [`TransitionSystem::assignment`]) to a value inside the schema's
/// declared domains; the explorer reports a model-integrity error otherwise.
pub trait TransitionSystem {
    type State: Clone + Send + Sync;

    fn schema(&self) -> &Schema;

    fn initial_states(&self) -> Vec<Self::State>;

    fn successors(&self, state: &Self::State) -> Vec<(ActionLabel, Self::State)>;

    /// Invariants in declaration order.
    fn invariants(&self) -> &[Invariant<Self::State>];

    fn assignment(&self, state: &Self::State) -> Assignment;
}
