//! Frozen expected values, each computed by an independent oracle and then
//! compared against the explorer.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use permcheck::kernel::{
    check, reachable_states, reachable_stats, CheckOptions, TransitionSystem, Verdict,
};
use permcheck::models::cs1::{ApsCs1, TYPE_OK};
use permcheck::models::custom::{AppSpec, CustomPermissions, ProtectionLevel};
use permcheck::scenario::parse_scenario;

// (distinct states, transitions, diameter), computed by `Cs1Oracle`.
const CS1_ONE_APP: (usize, usize, usize) = (11, 35, 3);
const CS1_TWO_APPS: (usize, usize, usize) = (85, 494, 6);

#[test]
fn cs1_oracle_matches_frozen_values() {
    let one = Cs1Oracle::new(1);
    assert_eq!(one.type_correct, 18);
    assert_eq!(
        (one.reachable.len(), one.transitions, one.diameter),
        CS1_ONE_APP
    );
    // the one unreachable granted-in-{NONE,DAN} single-app state
    let unreachable: Vec<_> = cs1_all_states(1)
        .into_iter()
        .filter(|s| s[0].1 != "NOR" && !one.reachable.contains_key(s))
        .collect();
    assert_eq!(unreachable, vec![vec![("", "DAN", 0)]]);
    assert_eq!(one.min_violation_depth(), Some(2));

    let two = Cs1Oracle::new(2);
    assert_eq!(
        (two.reachable.len(), two.transitions, two.diameter),
        CS1_TWO_APPS
    );
    assert_eq!(two.min_violation_depth(), Some(2));
}

#[test]
fn cs1_kernel_matches_frozen_values() {
    for (n, expected) in [(1, CS1_ONE_APP), (2, CS1_TWO_APPS)] {
        let sys = ApsCs1::new(n).unwrap();
        let report = check(&sys, &CheckOptions::only(&[TYPE_OK])).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        let s = report.stats;
        assert_eq!(
            (s.distinct_states, s.transitions, s.diameter),
            expected,
            "n = {n}"
        );
        assert_eq!(reachable_stats(&sys, 1_000).unwrap(), s);
    }
}

#[test]
fn cs1_reachable_sets_are_equal() {
    for n in [1, 2] {
        let sys = ApsCs1::new(n).unwrap();
        let kernel: BTreeSet<BTreeMap<(String, String), String>> = reachable_states(&sys, 10_000)
            .unwrap()
            .iter()
            .map(|state| {
                sys.schema()
                    .decode(state)
                    .into_iter()
                    .flat_map(|(var, cells)| {
                        cells
                            .into_iter()
                            .map(move |(app, v)| ((var.clone(), app), v.to_string()))
                    })
                    .collect()
            })
            .collect();
        assert_eq!(kernel, Cs1Oracle::new(n).reachable_as_maps(), "n = {n}");
    }
}

fn vuln() -> Vec<OApp> {
    vec![
        OApp {
            id: "malware".into(),
            declares: [("P".to_string(), false)].into(),
            requests: ["P".to_string()].into(),
        },
        OApp {
            id: "victim".into(),
            declares: [("P".to_string(), true)].into(),
            requests: BTreeSet::new(),
        },
    ]
}

#[test]
fn custom_vuln_oracle() {
    assert_eq!(custom_min_violation(&vuln()), Some(3));
    // victim alone: nothing to escalate
    assert_eq!(custom_min_violation(&vuln()[1..]), None);
}

#[test]
fn custom_state_counts_match_oracle() {
    let apps = vec![
        AppSpec::new("malware")
            .declare("P", ProtectionLevel::Normal)
            .request("P"),
        AppSpec::new("victim").declare("P", ProtectionLevel::Dangerous),
    ];
    let sys = CustomPermissions::new(&apps).unwrap();
    let stats = reachable_stats(&sys, 1_000).unwrap();
    assert_eq!(stats.distinct_states, custom_reachable(&vuln()).len());
}

#[test]
fn random_custom_reachable_counts_match_oracle() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let apps = random_custom_apps(&mut rng);
        let def = parse_scenario(&custom_scenario_text(&apps)).unwrap();
        let sys = CustomPermissions::new(&def.apps).unwrap();
        let stats = reachable_stats(&sys, 100_000).unwrap();
        assert_eq!(
            stats.distinct_states,
            custom_reachable(&apps).len(),
            "{apps:?}"
        );
    }
}
