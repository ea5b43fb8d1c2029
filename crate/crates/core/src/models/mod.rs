//! Built-in models and the registry that instantiates them from scenarios.

pub mod cs1;
pub mod custom;

use thiserror::Error;

use crate::kernel::{self, CheckError, CheckOptions, CheckReport, Stats};
use crate::report::{self, ReplayError, ReplayOutcome};
use crate::scenario::ScenarioDef;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Static description of a registered model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub invariants: &'static [&'static str],
}

/// Registered models, sorted by name.
pub const MODELS: &[ModelInfo] = &[
    ModelInfo {
        name: cs1::MODEL_NAME,
        params: "apps <count>",
        invariants: &[cs1::TYPE_OK, cs1::CONSISTENT],
    },
    ModelInfo {
        name: custom::MODEL_NAME,
        params: "app <id> { declare <name> level normal|dangerous; request <name> }",
        invariants: &[custom::ESCALATION_FREE],
    },
];

pub fn lookup(name: &str) -> Option<&'static ModelInfo> {
    MODELS.iter().find(|m| m.name == name)
}

/// A model instantiated from a scenario.
pub enum Model {
    ApsCs1(cs1::ApsCs1),
    Custom(custom::CustomPermissions),
}

macro_rules! dispatch {
    ($model:expr, $sys:ident => $body:expr) => {
        match $model {
            Model::ApsCs1($sys) => $body,
            Model::Custom($sys) => $body,
        }
    };
}

impl Model {
    pub fn from_scenario(def: &ScenarioDef) -> Result<Self, ConfigError> {
        match def.model.as_str() {
            cs1::MODEL_NAME => {
                let apps = def
                    .params
                    .get("apps")
                    .copied()
                    .ok_or_else(|| ConfigError::new("aps_cs1 requires `apps`"))?;
                let apps = usize::try_from(apps)
                    .map_err(|_| ConfigError::new("app count does not fit in memory"))?;
                Ok(Model::ApsCs1(cs1::ApsCs1::new(apps)?))
            }
            custom::MODEL_NAME => Ok(Model::Custom(custom::CustomPermissions::new(&def.apps)?)),
            other => Err(ConfigError::new(format!("unknown model `{other}`"))),
        }
    }

    pub fn check(&self, options: &CheckOptions) -> Result<CheckReport, CheckError> {
        dispatch!(self, sys => kernel::check(sys, options))
    }

    pub fn reachable_stats(&self, max_states: usize) -> Result<Stats, CheckError> {
        dispatch!(self, sys => kernel::reachable_stats(sys, max_states))
    }

    pub fn replay(&self, document: &str) -> Result<ReplayOutcome, ReplayError> {
        dispatch!(self, sys => report::replay(document, sys))
    }
}
