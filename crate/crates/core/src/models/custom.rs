//! Custom permissions with protection levels and install-order precedence.
//!
//! Apps declare named permissions at a protection level and request names.
//! The first installed app that declares a name fixes its registry entry;
//! later declarers of the same name are ignored. A normal-level request is
//! granted automatically; a dangerous-level request branches on the user's
//! decision, and a denial is remembered so the prompt is shown once per
//! (app, name) pair.
//!
//! The checked property, `escalation_free`, forbids an automatic grant of a
//! name that some installed app declares as dangerous.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::kernel::{ActionLabel, Assignment, Invariant, Schema, TransitionSystem, Value, VarDecl};
use crate::models::ConfigError;

pub const MODEL_NAME: &str = "custom_permissions";
pub const ESCALATION_FREE: &str = "escalation_free";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtectionLevel {
    Normal,
    Dangerous,
}

impl ProtectionLevel {
    pub const ALL: [ProtectionLevel; 2] = [ProtectionLevel::Normal, ProtectionLevel::Dangerous];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtectionLevel::Normal => "normal",
            ProtectionLevel::Dangerous => "dangerous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }
}

impl fmt::Display for ProtectionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An app in a scenario: the permissions it defines and the names it asks for.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AppSpec {
    pub id: String,
    pub declares: BTreeMap<String, ProtectionLevel>,
    pub requests: BTreeSet<String>,
}

impl AppSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Self::default()
        }
    }

    pub fn declare(mut self, name: impl Into<String>, level: ProtectionLevel) -> Self {
        self.declares.insert(name.into(), level);
        self
    }

    pub fn request(mut self, name: impl Into<String>) -> Self {
        self.requests.insert(name.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrantMode {
    Auto,
    Consent,
}

impl GrantMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GrantMode::Auto => "AUTO",
            GrantMode::Consent => "CONSENT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegistryEntry {
    pub level: ProtectionLevel,
    /// Index of the defining app.
    pub definer: usize,
}

/// One (app, requested name) pair, the unit a grant or denial applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Slot {
    app: usize,
    name: usize,
}

/// Device state, indexed by the model's sorted app and name tables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeviceState {
    pub installed: Vec<bool>,
    /// Active definition per permission name.
    pub registry: Vec<Option<RegistryEntry>>,
    /// Grant per request slot.
    pub grants: Vec<Option<GrantMode>>,
    /// Whether the user denied the request in each slot.
    pub denied: Vec<bool>,
}

/// Outcome of a request, distinguishing the user's decision on dangerous
/// permissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestOutcome {
    Auto,
    UserAllow,
    UserDeny,
}

impl RequestOutcome {
    fn action(self) -> &'static str {
        match self {
            RequestOutcome::Auto => "Request",
            RequestOutcome::UserAllow => "UserAllow",
            RequestOutcome::UserDeny => "UserDeny",
        }
    }
}

pub struct CustomPermissions {
    apps: Vec<AppSpec>,
    names: Vec<String>,
    slots: Vec<Slot>,
    schema: Schema,
    invariants: Vec<Invariant<DeviceState>>,
}

impl CustomPermissions {
    /// Builds the model; apps are ordered by ascending id regardless of the
    /// order given.
    pub fn new(apps: &[AppSpec]) -> Result<Self, ConfigError> {
        if apps.is_empty() {
            return Err(ConfigError::new(
                "custom_permissions needs at least one app",
            ));
        }
        let mut apps = apps.to_vec();
        apps.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = apps.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ConfigError::new(format!("duplicate app id `{}`", w[0].id)));
        }
        if let Some(app) = apps.iter().find(|a| a.id.is_empty()) {
            return Err(ConfigError::new(format!(
                "app `{}` has an empty id",
                app.id
            )));
        }

        let names: Vec<String> = apps
            .iter()
            .flat_map(|a| a.declares.keys().chain(a.requests.iter()))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if names.iter().any(String::is_empty) {
            return Err(ConfigError::new("permission names must be non-empty"));
        }
        let name_index = |n: &str| names.iter().position(|x| x == n).expect("collected above");

        let slots: Vec<Slot> = apps
            .iter()
            .enumerate()
            .flat_map(|(app, spec)| spec.requests.iter().map(move |n| (app, n.clone())))
            .map(|(app, n)| Slot {
                app,
                name: name_index(&n),
            })
            .collect();

        let app_ids: Vec<String> = apps.iter().map(|a| a.id.clone()).collect();
        let slot_keys: Vec<String> = slots
            .iter()
            .map(|s| format!("{}:{}", apps[s.app].id, names[s.name]))
            .collect();
        let mut registry_domain = vec![Value::text("")];
        for level in ProtectionLevel::ALL {
            for app in &apps {
                registry_domain.push(registry_value(level, &app.id));
            }
        }
        let schema = Schema::new(vec![
            VarDecl::new("installed", app_ids, vec![0.into(), 1.into()]),
            VarDecl::new("registry", names.clone(), registry_domain),
            VarDecl::new(
                "grants",
                slot_keys.clone(),
                vec!["".into(), "AUTO".into(), "CONSENT".into()],
            ),
            VarDecl::new("denied", slot_keys, vec![0.into(), 1.into()]),
        ])
        .map_err(|e| ConfigError::new(e.to_string()))?;

        // dangerous_declarers[name] = apps declaring that name as dangerous
        let dangerous_declarers: Vec<Vec<usize>> = names
            .iter()
            .map(|n| {
                apps.iter()
                    .enumerate()
                    .filter(|(_, a)| a.declares.get(n) == Some(&ProtectionLevel::Dangerous))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let slot_names: Vec<usize> = slots.iter().map(|s| s.name).collect();
        let invariants = vec![Invariant::new(ESCALATION_FREE, move |s: &DeviceState| {
            escalation_free(s, &slot_names, &dangerous_declarers)
        })];

        Ok(Self {
            apps,
            names,
            slots,
            schema,
            invariants,
        })
    }

    pub fn apps(&self) -> &[AppSpec] {
        &self.apps
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn app_index(&self, id: &str) -> Option<usize> {
        self.apps.iter().position(|a| a.id == id)
    }

    pub fn name_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn slot_index(&self, app: usize, name: usize) -> Option<usize> {
        self.slots
            .iter()
            .position(|s| s.app == app && s.name == name)
    }

    pub fn empty_device(&self) -> DeviceState {
        DeviceState {
            installed: vec![false; self.apps.len()],
            registry: vec![None; self.names.len()],
            grants: vec![None; self.slots.len()],
            denied: vec![false; self.slots.len()],
        }
    }

    /// Installs `app`, registering each of its declarations whose name has no
    /// active definition yet. Disabled if the app is already installed.
    pub fn install(&self, s: &DeviceState, app: usize) -> Option<DeviceState> {
        if s.installed[app] {
            return None;
        }
        let mut next = s.clone();
        next.installed[app] = true;
        for (name, &level) in &self.apps[app].declares {
            let n = self.name_index(name).expect("declared names are indexed");
            next.registry[n].get_or_insert(RegistryEntry {
                level,
                definer: app,
            });
        }
        Some(next)
    }

    /// Successors of `app` requesting `name`: one automatic grant for a
    /// normal-level name, or an allow/deny pair for a dangerous one. Returns
    /// `None` when the request is disabled.
    pub fn request(
        &self,
        s: &DeviceState,
        app: usize,
        name: usize,
    ) -> Option<Vec<(RequestOutcome, DeviceState)>> {
        let slot = self.slot_index(app, name)?;
        if !s.installed[app] || s.grants[slot].is_some() || s.denied[slot] {
            return None;
        }
        let entry = s.registry[name]?;
        let with = |f: &dyn Fn(&mut DeviceState)| {
            let mut next = s.clone();
            f(&mut next);
            next
        };
        Some(match entry.level {
            ProtectionLevel::Normal => vec![(
                RequestOutcome::Auto,
                with(&|n| n.grants[slot] = Some(GrantMode::Auto)),
            )],
            ProtectionLevel::Dangerous => vec![
                (
                    RequestOutcome::UserAllow,
                    with(&|n| n.grants[slot] = Some(GrantMode::Consent)),
                ),
                (RequestOutcome::UserDeny, with(&|n| n.denied[slot] = true)),
            ],
        })
    }

    /// Grants as `(app id, name, mode)` triples.
    pub fn grant_list(&self, s: &DeviceState) -> Vec<(&str, &str, GrantMode)> {
        self.slots
            .iter()
            .zip(&s.grants)
            .filter_map(|(slot, g)| {
                g.map(|mode| {
                    (
                        self.apps[slot.app].id.as_str(),
                        self.names[slot.name].as_str(),
                        mode,
                    )
                })
            })
            .collect()
    }

    pub fn escalation_free(&self, s: &DeviceState) -> bool {
        self.invariants[0].holds(s)
    }
}

fn registry_value(level: ProtectionLevel, definer: &str) -> Value {
    Value::Text(format!("{level}@{definer}"))
}

fn escalation_free(
    s: &DeviceState,
    slot_names: &[usize],
    dangerous_declarers: &[Vec<usize>],
) -> bool {
    !s.grants.iter().zip(slot_names).any(|(grant, &name)| {
        *grant == Some(GrantMode::Auto) && dangerous_declarers[name].iter().any(|&a| s.installed[a])
    })
}

impl TransitionSystem for CustomPermissions {
    type State = DeviceState;

    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn initial_states(&self) -> Vec<DeviceState> {
        vec![self.empty_device()]
    }

    /// Per app, ascending id: `Install`, then one request per requested
    /// name, ascending.
    fn successors(&self, s: &DeviceState) -> Vec<(ActionLabel, DeviceState)> {
        let mut out = Vec::new();
        for (a, app) in self.apps.iter().enumerate() {
            if let Some(next) = self.install(s, a) {
                out.push((
                    ActionLabel::new("Install").with("app", app.id.as_str()),
                    next,
                ));
            }
            for name in &app.requests {
                let n = self.name_index(name).expect("requested names are indexed");
                for (outcome, next) in self.request(s, a, n).unwrap_or_default() {
                    let label = ActionLabel::new(outcome.action())
                        .with("app", app.id.as_str())
                        .with("perm", name.as_str());
                    out.push((label, next));
                }
            }
        }
        out
    }

    fn invariants(&self) -> &[Invariant<DeviceState>] {
        &self.invariants
    }

    fn assignment(&self, s: &DeviceState) -> Assignment {
        let mut a = Assignment::new();
        a.insert(
            "installed".into(),
            self.apps
                .iter()
                .zip(&s.installed)
                .map(|(app, &i)| (app.id.clone(), Value::Int(i64::from(i))))
                .collect(),
        );
        a.insert(
            "registry".into(),
            self.names
                .iter()
                .zip(&s.registry)
                .map(|(name, entry)| {
                    let value = match entry {
                        Some(e) => registry_value(e.level, &self.apps[e.definer].id),
                        None => Value::text(""),
                    };
                    (name.clone(), value)
                })
                .collect(),
        );
        let slot_key =
            |slot: &Slot| format!("{}:{}", self.apps[slot.app].id, self.names[slot.name]);
        a.insert(
            "grants".into(),
            self.slots
                .iter()
                .zip(&s.grants)
                .map(|(slot, g)| (slot_key(slot), Value::text(g.map_or("", GrantMode::as_str))))
                .collect(),
        );
        a.insert(
            "denied".into(),
            self.slots
                .iter()
                .zip(&s.denied)
                .map(|(slot, &d)| (slot_key(slot), Value::Int(i64::from(d))))
                .collect(),
        );
        a
    }
}
