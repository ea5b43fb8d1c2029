//! The APS_CS1 permission model.
//!
//! Three per-app variables: the permission level an app asked for, the level
//! it was granted, and whether it has been installed. Actions are
//! `InstallOrder(r)`, `Ask(r, p)` and `Grant(r)`. Grant fires when the app
//! asked for a normal permission *or* is installed, and always grants the
//! dangerous level, which is exactly what `ApsConsistent` catches.
//!
//! The empty level is an explicit [`PermLevel::None`] value so every map stays
//! total. Only genuine action steps are explored; stuttering steps cannot
//! change a safety verdict.

use std::collections::BTreeMap;
use std::fmt;

use crate::kernel::{ActionLabel, Assignment, Invariant, Schema, TransitionSystem, Value, VarDecl};
use crate::models::ConfigError;

pub const MODEL_NAME: &str = "aps_cs1";
pub const TYPE_OK: &str = "ApsTypeOK";
pub const CONSISTENT: &str = "ApsConsistent";

pub const ASKED: &str = "askedPerms";
pub const GRANTED: &str = "grantedPerms";
pub const INSTALLED: &str = "alreadyInstalled";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PermLevel {
    /// The empty-string level every app starts with.
    None,
    Nor,
    Dan,
}

impl PermLevel {
    pub const ALL: [PermLevel; 3] = [PermLevel::None, PermLevel::Nor, PermLevel::Dan];

    pub fn as_str(self) -> &'static str {
        match self {
            PermLevel::None => "",
            PermLevel::Nor => "NOR",
            PermLevel::Dan => "DAN",
        }
    }
}

impl fmt::Display for PermLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One CS1 state. Apps are indexed `0..n` and named `a1..an`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cs1State {
    pub asked: Vec<PermLevel>,
    pub granted: Vec<PermLevel>,
    pub installed: Vec<u8>,
}

impl Cs1State {
    pub fn init(app_count: usize) -> Result<Self, ConfigError> {
        if app_count == 0 {
            return Err(ConfigError::new("aps_cs1 needs at least one app"));
        }
        Ok(Self {
            asked: vec![PermLevel::None; app_count],
            granted: vec![PermLevel::None; app_count],
            installed: vec![0; app_count],
        })
    }

    /// Enabled only while no app at all is installed.
    pub fn install_order(&self, r: usize) -> Option<Self> {
        if self.installed.iter().any(|&i| i != 0) {
            return None;
        }
        let mut next = self.clone();
        next.installed[r] = 1;
        Some(next)
    }

    /// Always enabled; overwrites whatever level was asked before.
    ///
    /// Panics if `p` is [`PermLevel::None`]: apps only ever ask for a real
    /// level.
    pub fn ask(&self, r: usize, p: PermLevel) -> Self {
        assert_ne!(p, PermLevel::None, "Ask requires NOR or DAN");
        let mut next = self.clone();
        next.asked[r] = p;
        next
    }

    pub fn grant(&self, r: usize) -> Option<Self> {
        if self.asked[r] != PermLevel::Nor && self.installed[r] != 1 {
            return None;
        }
        let mut next = self.clone();
        next.granted[r] = PermLevel::Dan;
        Some(next)
    }

    /// All three maps are total over `app_count` apps with in-domain values.
    pub fn type_ok(&self, app_count: usize) -> bool {
        self.asked.len() == app_count
            && self.granted.len() == app_count
            && self.installed.len() == app_count
            && self.installed.iter().all(|&i| i <= 1)
    }

    /// No app holds a dangerous grant obtained while asking for a normal one.
    pub fn consistent(&self) -> bool {
        !self
            .asked
            .iter()
            .zip(&self.granted)
            .any(|(a, g)| *a == PermLevel::Nor && *g == PermLevel::Dan)
    }
}

pub fn app_id(r: usize) -> String {
    format!("a{}", r + 1)
}

pub struct ApsCs1 {
    app_count: usize,
    app_ids: Vec<String>,
    schema: Schema,
    invariants: Vec<Invariant<Cs1State>>,
}

impl ApsCs1 {
    pub fn new(app_count: usize) -> Result<Self, ConfigError> {
        Cs1State::init(app_count)?;
        let app_ids: Vec<String> = (0..app_count).map(app_id).collect();
        let levels: Vec<Value> = PermLevel::ALL.iter().map(|l| l.as_str().into()).collect();
        let schema = Schema::new(vec![
            VarDecl::new(ASKED, app_ids.clone(), levels.clone()),
            VarDecl::new(GRANTED, app_ids.clone(), levels),
            VarDecl::new(INSTALLED, app_ids.clone(), vec![0.into(), 1.into()]),
        ])
        .map_err(|e| ConfigError::new(e.to_string()))?;
        let invariants = vec![
            Invariant::new(TYPE_OK, move |s: &Cs1State| s.type_ok(app_count)),
            Invariant::new(CONSISTENT, Cs1State::consistent),
        ];
        Ok(Self {
            app_count,
            app_ids,
            schema,
            invariants,
        })
    }

    pub fn app_count(&self) -> usize {
        self.app_count
    }
}

impl TransitionSystem for ApsCs1 {
    type State = Cs1State;

    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn initial_states(&self) -> Vec<Cs1State> {
        vec![Cs1State::init(self.app_count).expect("app count validated in new")]
    }

    /// Per app, ascending: `InstallOrder`, `Ask(NOR)`, `Ask(DAN)`, `Grant`.
    /// Self-loops are emitted; the explorer drops them as duplicates.
    fn successors(&self, s: &Cs1State) -> Vec<(ActionLabel, Cs1State)> {
        let mut out = Vec::with_capacity(self.app_count * 4);
        for (r, id) in self.app_ids.iter().enumerate() {
            if let Some(next) = s.install_order(r) {
                out.push((
                    ActionLabel::new("InstallOrder").with("r", id.as_str()),
                    next,
                ));
            }
            for p in [PermLevel::Nor, PermLevel::Dan] {
                out.push((
                    ActionLabel::new("Ask")
                        .with("r", id.as_str())
                        .with("p", p.as_str()),
                    s.ask(r, p),
                ));
            }
            if let Some(next) = s.grant(r) {
                out.push((ActionLabel::new("Grant").with("r", id.as_str()), next));
            }
        }
        out
    }

    fn invariants(&self) -> &[Invariant<Cs1State>] {
        &self.invariants
    }

    fn assignment(&self, s: &Cs1State) -> Assignment {
        let cells = |values: Vec<Value>| -> BTreeMap<String, Value> {
            self.app_ids.iter().cloned().zip(values).collect()
        };
        let mut a = Assignment::new();
        a.insert(
            ASKED.into(),
            cells(s.asked.iter().map(|l| l.as_str().into()).collect()),
        );
        a.insert(
            GRANTED.into(),
            cells(s.granted.iter().map(|l| l.as_str().into()).collect()),
        );
        a.insert(
            INSTALLED.into(),
            cells(
                s.installed
                    .iter()
                    .map(|&i| Value::Int(i64::from(i)))
                    .collect(),
            ),
        );
        a
    }
}
