use std::fs;
use std::path::{Path, PathBuf};

use permcheck::models::Model;
use permcheck::scenario::{
    parse_scenario, parse_scenario_bytes, render_scenario, validate_semantics, Severity,
};

fn corpus(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/corpus")
        .join(dir)
}

fn scn_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    files
}

#[test]
fn valid_corpus_parses_and_round_trips() {
    let files = scn_files(&corpus("valid"));
    assert!(files.len() >= 20, "valid corpus has {} files", files.len());
    for path in files {
        let src = fs::read_to_string(&path).unwrap();
        let def = parse_scenario(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(
            validate_semantics(&def)
                .iter()
                .all(|f| f.severity == Severity::Warning),
            "{}",
            path.display()
        );
        let rendered = render_scenario(&def);
        assert_eq!(
            parse_scenario(&rendered).unwrap(),
            def,
            "{}",
            path.display()
        );
        // rendering is canonical: a second pass is a fixed point
        assert_eq!(
            render_scenario(&parse_scenario(&rendered).unwrap()),
            rendered
        );
        Model::from_scenario(&def).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn invalid_corpus_reports_the_injected_line() {
    let dir = corpus("invalid");
    let expected = fs::read_to_string(dir.join("expected_lines.txt")).unwrap();
    let mut checked = 0;
    for entry in expected.lines().filter(|l| !l.trim().is_empty()) {
        let (file, line) = entry.split_once(' ').unwrap();
        let line: usize = line.trim().parse().unwrap();
        let bytes = fs::read(dir.join(file)).unwrap();
        let err = parse_scenario_bytes(&bytes).expect_err(file);
        assert_eq!(err.line, line, "{file}: {err}");
        checked += 1;
    }
    assert!(checked >= 10);
    assert_eq!(
        checked,
        scn_files(&dir).len(),
        "every invalid file has an expected line"
    );
}

#[test]
fn unrequested_name_warns() {
    let src = fs::read_to_string(corpus("valid").join("custom_unrequested_warning.scn")).unwrap();
    let findings = validate_semantics(&parse_scenario(&src).unwrap());
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].severity, Severity::Warning);
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    for name in ["cs1.scn", "custom_vuln.scn", "custom_safe.scn"] {
        let src = fs::read_to_string(dir.join(name)).unwrap();
        parse_scenario(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
