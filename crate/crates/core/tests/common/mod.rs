//! Independent oracles for the integration tests.
//!
//! Nothing here calls into the crate's models or explorer. The CS1 oracle
//! evaluates the next-state formula as a relation over every pair of
//! type-correct states and computes reachability by fixpoint. The custom
//! permission oracle re-states the install/request semantics over string
//! sets and searches by iterative deepening.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::Rng;

// ---------------------------------------------------------------- CS1 ----

pub const LEVELS: [&str; 3] = ["", "NOR", "DAN"];

/// (asked, granted, installed) per app.
pub type Cs1Tuple = Vec<(&'static str, &'static str, i64)>;

pub fn cs1_all_states(n: usize) -> Vec<Cs1Tuple> {
    let mut cells = Vec::new();
    for a in LEVELS {
        for g in LEVELS {
            for i in [0, 1] {
                cells.push((a, g, i));
            }
        }
    }
    let mut out: Vec<Cs1Tuple> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                cells.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(*c);
                    v
                })
            })
            .collect();
    }
    out
}

fn unchanged_except(s: &Cs1Tuple, t: &Cs1Tuple, r: usize) -> bool {
    (0..s.len()).all(|k| k == r || s[k] == t[k])
}

/// Labels of every action instance whose formula relates `s` to `t`.
pub fn cs1_relation(s: &Cs1Tuple, t: &Cs1Tuple) -> Vec<String> {
    let mut labels = Vec::new();
    for r in 0..s.len() {
        let app = format!("a{}", r + 1);
        if !unchanged_except(s, t, r) {
            continue;
        }
        let (a, g, i) = s[r];
        let (a2, g2, i2) = t[r];
        // InstallOrder(r)
        if s.iter().all(|c| c.2 == 0) && i2 == 1 && a2 == a && g2 == g {
            labels.push(format!("InstallOrder({app})"));
        }
        // Ask(r) with the existential unfolded
        for p in ["NOR", "DAN"] {
            if a2 == p && g2 == g && i2 == i {
                labels.push(format!("Ask({app}, {p})"));
            }
        }
        // Grant(r)
        if (a == "NOR" || i == 1) && g2 == "DAN" && a2 == a && i2 == i {
            labels.push(format!("Grant({app})"));
        }
    }
    labels
}

pub fn cs1_consistent(s: &Cs1Tuple) -> bool {
    !s.iter().any(|c| c.0 == "NOR" && c.1 == "DAN")
}

pub struct Cs1Oracle {
    /// Reachable states with their breadth-first depth.
    pub reachable: BTreeMap<Cs1Tuple, usize>,
    pub transitions: usize,
    pub diameter: usize,
    pub type_correct: usize,
}

impl Cs1Oracle {
    pub fn new(n: usize) -> Self {
        let all = cs1_all_states(n);
        let init: Cs1Tuple = vec![("", "", 0); n];
        let mut reachable = BTreeMap::new();
        reachable.insert(init, 0usize);
        let mut depth = 0;
        loop {
            let layer: Vec<Cs1Tuple> = reachable
                .iter()
                .filter(|(_, d)| **d == depth)
                .map(|(s, _)| s.clone())
                .collect();
            let mut grew = false;
            for s in &layer {
                for t in &all {
                    if !reachable.contains_key(t) && !cs1_relation(s, t).is_empty() {
                        reachable.insert(t.clone(), depth + 1);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
            depth += 1;
        }
        let transitions = reachable
            .keys()
            .map(|s| all.iter().map(|t| cs1_relation(s, t).len()).sum::<usize>())
            .sum();
        let diameter = reachable.values().copied().max().unwrap_or(0);
        Self {
            reachable,
            transitions,
            diameter,
            type_correct: all.len(),
        }
    }

    pub fn min_violation_depth(&self) -> Option<usize> {
        self.reachable
            .iter()
            .filter(|(s, _)| !cs1_consistent(s))
            .map(|(_, d)| *d)
            .min()
    }

    /// Reachable states as `(var, app) -> value` strings, comparable with
    /// decoded kernel states.
    pub fn reachable_as_maps(&self) -> BTreeSet<BTreeMap<(String, String), String>> {
        self.reachable
            .keys()
            .map(|s| {
                let mut m = BTreeMap::new();
                for (r, (a, g, i)) in s.iter().enumerate() {
                    let app = format!("a{}", r + 1);
                    m.insert(("askedPerms".into(), app.clone()), format!("{a:?}"));
                    m.insert(("grantedPerms".into(), app.clone()), format!("{g:?}"));
                    m.insert(("alreadyInstalled".into(), app), i.to_string());
                }
                m
            })
            .collect()
    }
}

// ------------------------------------------------------------- custom ----

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OApp {
    pub id: String,
    /// name -> is_dangerous
    pub declares: BTreeMap<String, bool>,
    pub requests: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ODevice {
    pub installed: BTreeSet<String>,
    /// name -> (dangerous, definer)
    pub registry: BTreeMap<String, (bool, String)>,
    /// (app, name, auto)
    pub grants: BTreeSet<(String, String, bool)>,
    pub denied: BTreeSet<(String, String)>,
}

pub fn custom_moves(apps: &[OApp], s: &ODevice) -> Vec<(String, ODevice)> {
    let mut out = Vec::new();
    for app in apps {
        if !s.installed.contains(&app.id) {
            let mut t = s.clone();
            t.installed.insert(app.id.clone());
            for (name, dangerous) in &app.declares {
                t.registry
                    .entry(name.clone())
                    .or_insert((*dangerous, app.id.clone()));
            }
            out.push((format!("Install({})", app.id), t));
            continue;
        }
        for name in &app.requests {
            let pair = (app.id.clone(), name.clone());
            let already = s
                .grants
                .iter()
                .any(|(a, n, _)| *a == pair.0 && *n == pair.1)
                || s.denied.contains(&pair);
            let Some((dangerous, _)) = s.registry.get(name) else {
                continue;
            };
            if already {
                continue;
            }
            if *dangerous {
                let mut allow = s.clone();
                allow.grants.insert((pair.0.clone(), pair.1.clone(), false));
                out.push((format!("UserAllow({}, {name})", app.id), allow));
                let mut deny = s.clone();
                deny.denied.insert(pair);
                out.push((format!("UserDeny({}, {name})", app.id), deny));
            } else {
                let mut auto = s.clone();
                auto.grants.insert((pair.0, pair.1, true));
                out.push((format!("Request({}, {name})", app.id), auto));
            }
        }
    }
    out
}

pub fn custom_violates(apps: &[OApp], s: &ODevice) -> bool {
    s.grants.iter().any(|(_, name, auto)| {
        *auto
            && apps
                .iter()
                .any(|a| s.installed.contains(&a.id) && a.declares.get(name) == Some(&true))
    })
}

fn dls(apps: &[OApp], s: &ODevice, budget: usize) -> bool {
    if custom_violates(apps, s) {
        return true;
    }
    budget > 0
        && custom_moves(apps, s)
            .iter()
            .any(|(_, t)| dls(apps, t, budget - 1))
}

/// Shortest number of actions to a violating state, by iterative deepening.
pub fn custom_min_violation(apps: &[OApp]) -> Option<usize> {
    let bound = apps.len() + apps.iter().map(|a| a.requests.len()).sum::<usize>();
    (0..=bound).find(|&d| dls(apps, &ODevice::default(), d))
}

/// Every reachable device state.
pub fn custom_reachable(apps: &[OApp]) -> HashSet<ODevice> {
    let mut seen = HashSet::new();
    let mut stack = vec![ODevice::default()];
    while let Some(s) = stack.pop() {
        if seen.insert(s.clone()) {
            for (_, t) in custom_moves(apps, &s) {
                stack.push(t);
            }
        }
    }
    seen
}

/// Random scenario with up to 3 apps and up to 2 permission names.
pub fn random_custom_apps(rng: &mut impl Rng) -> Vec<OApp> {
    let names = ["P", "Q"];
    let n_names = rng.gen_range(1..=2);
    let n_apps = rng.gen_range(1..=3);
    (0..n_apps)
        .map(|i| {
            let mut declares = BTreeMap::new();
            let mut requests = BTreeSet::new();
            for name in &names[..n_names] {
                match rng.gen_range(0..3) {
                    0 => {}
                    1 => {
                        declares.insert(name.to_string(), false);
                    }
                    _ => {
                        declares.insert(name.to_string(), true);
                    }
                }
                if rng.gen_bool(0.5) {
                    requests.insert(name.to_string());
                }
            }
            OApp {
                id: format!("app{i}"),
                declares,
                requests,
            }
        })
        .collect()
}

/// Scenario text for oracle apps.
pub fn custom_scenario_text(apps: &[OApp]) -> String {
    let mut s = String::from("model custom_permissions\n");
    for app in apps {
        s.push_str(&format!("app {} {{\n", app.id));
        for (name, dangerous) in &app.declares {
            let level = if *dangerous { "dangerous" } else { "normal" };
            s.push_str(&format!("  declare {name} level {level}\n"));
        }
        for name in &app.requests {
            s.push_str(&format!("  request {name}\n"));
        }
        s.push_str("}\n");
    }
    s.push_str("check escalation_free\n");
    s
}
