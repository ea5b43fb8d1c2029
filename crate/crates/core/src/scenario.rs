//! Scenario files: which model to check, its parameters, and which
//! invariants to evaluate.
//!
//! ```text
//! model custom_permissions
//! app malware { declare P level normal
//!               request P }
//! app victim  { declare P level dangerous }
//! check escalation_free
//! ```
//!
//! Tokens are separated by arbitrary whitespace, `#` comments run to the end
//! of the line, and statements may appear in any order. Parsing stops at the
//! first syntax error; semantic errors are reported earliest-first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kernel::DEFAULT_MAX_STATES;
use crate::models::custom::{AppSpec, ProtectionLevel};
use crate::models::{cs1, custom, lookup};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDef {
    pub model: String,
    pub params: BTreeMap<String, u64>,
    /// Apps in file order (custom_permissions only).
    pub apps: Vec<AppSpec>,
    pub checks: Vec<String>,
    pub max_states: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    const START: Location = Location { line: 1, column: 1 };
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {} error: {message}", match .kind { ErrorKind::Syntax => "syntax", ErrorKind::Semantic => "semantic" })]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ErrorKind,
    pub message: String,
}

impl ParseError {
    fn syntax(at: Location, message: impl Into<String>) -> Self {
        Self {
            line: at.line,
            column: at.column,
            kind: ErrorKind::Syntax,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    /// Source position, when the finding came from parsed text.
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(loc) = self.location {
            write!(f, "{loc}: ")?;
        }
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}", self.message)
    }
}

pub fn parse_scenario(source: &str) -> Result<ScenarioDef, ParseError> {
    let tokens = lex(source)?;
    let raw = Parser::new(tokens, end_of(source)).scenario()?;
    let mut errors: Vec<Finding> = analyze(&raw)
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .collect();
    errors.sort_by_key(|f| f.location);
    if let Some(first) = errors.into_iter().next() {
        let at = first.location.unwrap_or(Location::START);
        return Err(ParseError {
            line: at.line,
            column: at.column,
            kind: ErrorKind::Semantic,
            message: first.message,
        });
    }
    Ok(lower(raw))
}

/// Like [`parse_scenario`], but accepts arbitrary bytes; invalid UTF-8 is a
/// syntax error at the offending position.
pub fn parse_scenario_bytes(bytes: &[u8]) -> Result<ScenarioDef, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse_scenario(s),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            Err(ParseError::syntax(end_of(valid), "invalid UTF-8"))
        }
    }
}

/// Checks a definition against the model registry. Errors make the
/// definition unusable; warnings flag requests for names nobody declares.
pub fn validate_semantics(def: &ScenarioDef) -> Vec<Finding> {
    analyze(&RawScenario::from_def(def))
}

/// Canonical text for `def`; declarations and requests are emitted
/// name-ascending.
pub fn render_scenario(def: &ScenarioDef) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", def.model);
    for (key, value) in &def.params {
        let _ = writeln!(out, "{key} {value}");
    }
    for app in &def.apps {
        let _ = writeln!(out, "app {} {{", app.id);
        for (name, level) in &app.declares {
            let _ = writeln!(out, "  declare {name} level {level}");
        }
        for name in &app.requests {
            let _ = writeln!(out, "  request {name}");
        }
        out.push_str("}\n");
    }
    for check in &def.checks {
        let _ = writeln!(out, "check {check}");
    }
    let _ = writeln!(out, "max_states {}", def.max_states);
    out
}

// ---- lexing ----

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Open,
    Close,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    loc: Location,
}

fn end_of(source: &str) -> Location {
    let mut loc = Location::START;
    for c in source.chars() {
        if c == '\n' {
            loc.line += 1;
            loc.column = 1;
        } else {
            loc.column += 1;
        }
    }
    loc
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut loc = Location::START;
    let mut chars = source.chars().peekable();
    let mut word: Option<(String, Location)> = None;

    let flush = |word: &mut Option<(String, Location)>, tokens: &mut Vec<Token>| {
        if let Some((w, at)) = word.take() {
            tokens.push(Token {
                tok: Tok::Word(w),
                loc: at,
            });
        }
    };

    while let Some(c) = chars.next() {
        let here = loc;
        if c == '\n' {
            loc.line += 1;
            loc.column = 1;
        } else {
            loc.column += 1;
        }
        match c {
            '#' => {
                flush(&mut word, &mut tokens);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    loc.column += 1;
                }
            }
            '{' | '}' => {
                flush(&mut word, &mut tokens);
                tokens.push(Token {
                    tok: if c == '{' { Tok::Open } else { Tok::Close },
                    loc: here,
                });
            }
            c if c.is_whitespace() => flush(&mut word, &mut tokens),
            c if c.is_control() => {
                return Err(ParseError::syntax(
                    here,
                    format!("unexpected character {c:?}"),
                ));
            }
            c => match &mut word {
                Some((w, _)) => w.push(c),
                None => word = Some((c.to_string(), here)),
            },
        }
    }
    flush(&mut word, &mut tokens);
    Ok(tokens)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn is_perm_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

// ---- parsing ----

#[derive(Debug, Clone)]
struct Spanned<T> {
    value: T,
    loc: Option<Location>,
}

impl<T> Spanned<T> {
    fn at(value: T, loc: Location) -> Self {
        Self {
            value,
            loc: Some(loc),
        }
    }

    fn bare(value: T) -> Self {
        Self { value, loc: None }
    }
}

#[derive(Debug, Clone)]
enum RawItem {
    Declare {
        name: Spanned<String>,
        level: Spanned<String>,
    },
    Request(Spanned<String>),
}

#[derive(Debug, Clone)]
struct RawApp {
    id: Spanned<String>,
    items: Vec<RawItem>,
}

/// Statements as written, with positions, before validation.
#[derive(Debug, Clone, Default)]
struct RawScenario {
    models: Vec<Spanned<String>>,
    params: Vec<(Spanned<String>, u64)>,
    apps: Vec<RawApp>,
    checks: Vec<Spanned<String>>,
    max_states: Vec<Spanned<u64>>,
}

impl RawScenario {
    fn from_def(def: &ScenarioDef) -> Self {
        let apps = def
            .apps
            .iter()
            .map(|app| {
                let declares = app.declares.iter().map(|(n, l)| RawItem::Declare {
                    name: Spanned::bare(n.clone()),
                    level: Spanned::bare(l.as_str().to_owned()),
                });
                let requests = app
                    .requests
                    .iter()
                    .map(|n| RawItem::Request(Spanned::bare(n.clone())));
                RawApp {
                    id: Spanned::bare(app.id.clone()),
                    items: declares.chain(requests).collect(),
                }
            })
            .collect();
        Self {
            models: vec![Spanned::bare(def.model.clone())],
            params: def
                .params
                .iter()
                .map(|(k, v)| (Spanned::bare(k.clone()), *v))
                .collect(),
            apps,
            checks: def.checks.iter().cloned().map(Spanned::bare).collect(),
            max_states: vec![Spanned::bare(def.max_states)],
        }
    }
}

struct Parser {
    tokens: std::vec::IntoIter<Token>,
    end: Location,
}

impl Parser {
    fn new(tokens: Vec<Token>, end: Location) -> Self {
        Self {
            tokens: tokens.into_iter(),
            end,
        }
    }

    fn scenario(mut self) -> Result<RawScenario, ParseError> {
        let mut raw = RawScenario::default();
        while let Some(token) = self.tokens.next() {
            let keyword = match token.tok {
                Tok::Word(w) => w,
                Tok::Open => return Err(ParseError::syntax(token.loc, "unexpected `{`")),
                Tok::Close => return Err(ParseError::syntax(token.loc, "unexpected `}`")),
            };
            match keyword.as_str() {
                "model" => raw.models.push(self.ident("model name")?),
                "check" => raw.checks.push(self.ident("invariant name")?),
                "apps" => {
                    let n = self.integer()?;
                    raw.params
                        .push((Spanned::at("apps".to_owned(), token.loc), n.value));
                }
                "max_states" => raw.max_states.push(self.integer()?),
                "app" => raw.apps.push(self.app_block(token.loc)?),
                other => return Err(ParseError::syntax(
                    token.loc,
                    format!(
                        "expected `model`, `apps`, `app`, `check` or `max_states`, found `{other}`"
                    ),
                )),
            }
        }
        Ok(raw)
    }

    fn word(&mut self, what: &str) -> Result<Spanned<String>, ParseError> {
        match self.tokens.next() {
            Some(Token {
                tok: Tok::Word(w),
                loc,
            }) => Ok(Spanned::at(w, loc)),
            Some(Token { tok, loc }) => Err(ParseError::syntax(
                loc,
                format!(
                    "expected {what}, found `{}`",
                    if tok == Tok::Open { '{' } else { '}' }
                ),
            )),
            None => Err(ParseError::syntax(
                self.end,
                format!("expected {what}, found end of input"),
            )),
        }
    }

    fn ident(&mut self, what: &str) -> Result<Spanned<String>, ParseError> {
        let w = self.word(what)?;
        if !is_ident(&w.value) {
            return Err(ParseError::syntax(
                w.loc.expect("parsed"),
                format!("`{}` is not a valid {what}", w.value),
            ));
        }
        Ok(w)
    }

    fn perm_name(&mut self) -> Result<Spanned<String>, ParseError> {
        let w = self.word("permission name")?;
        if !is_perm_name(&w.value) {
            return Err(ParseError::syntax(
                w.loc.expect("parsed"),
                format!("`{}` is not a valid permission name", w.value),
            ));
        }
        Ok(w)
    }

    fn integer(&mut self) -> Result<Spanned<u64>, ParseError> {
        let w = self.word("integer")?;
        let loc = w.loc.expect("parsed");
        if !w.value.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseError::syntax(
                loc,
                format!("expected integer, found `{}`", w.value),
            ));
        }
        w.value
            .parse()
            .map(|n| Spanned::at(n, loc))
            .map_err(|_| ParseError::syntax(loc, format!("integer `{}` is too large", w.value)))
    }

    fn app_block(&mut self, start: Location) -> Result<RawApp, ParseError> {
        let id = self.ident("app id")?;
        match self.tokens.next() {
            Some(Token { tok: Tok::Open, .. }) => {}
            Some(Token { loc, .. }) => return Err(ParseError::syntax(loc, "expected `{`")),
            None => {
                return Err(ParseError::syntax(
                    self.end,
                    "expected `{`, found end of input",
                ))
            }
        }
        let mut items = Vec::new();
        loop {
            let Some(token) = self.tokens.next() else {
                return Err(ParseError::syntax(start, "app block is never closed"));
            };
            match token.tok {
                Tok::Close => break,
                Tok::Word(w) if w == "declare" => {
                    let name = self.perm_name()?;
                    let kw = self.word("`level`")?;
                    if kw.value != "level" {
                        return Err(ParseError::syntax(
                            kw.loc.expect("parsed"),
                            format!("expected `level`, found `{}`", kw.value),
                        ));
                    }
                    let level = self.word("protection level")?;
                    items.push(RawItem::Declare { name, level });
                }
                Tok::Word(w) if w == "request" => items.push(RawItem::Request(self.perm_name()?)),
                Tok::Word(w) => {
                    return Err(ParseError::syntax(
                        token.loc,
                        format!("expected `declare`, `request` or `}}`, found `{w}`"),
                    ))
                }
                Tok::Open => return Err(ParseError::syntax(token.loc, "unexpected `{`")),
            }
        }
        Ok(RawApp { id, items })
    }
}

// ---- semantic analysis ----

fn analyze(raw: &RawScenario) -> Vec<Finding> {
    let mut findings = Vec::new();
    let mut error = |loc: Option<Location>, msg: String| {
        findings.push(Finding {
            severity: Severity::Error,
            location: loc,
            message: msg,
        })
    };

    for dup in raw.models.iter().skip(1) {
        error(dup.loc, "`model` given more than once".into());
    }
    for dup in raw.max_states.iter().skip(1) {
        error(dup.loc, "`max_states` given more than once".into());
    }
    if let Some(m) = raw.max_states.first() {
        if m.value == 0 {
            error(m.loc, "`max_states` must be at least 1".into());
        }
    }

    let model = raw.models.first();
    let info = match model {
        None => {
            error(
                Some(Location::START),
                "scenario does not name a `model`".into(),
            );
            None
        }
        Some(m) => {
            let info = lookup(&m.value);
            if info.is_none() {
                error(m.loc, format!("unknown model `{}`", m.value));
            }
            info
        }
    };

    let mut seen_params = BTreeSet::new();
    for (key, _) in &raw.params {
        if !seen_params.insert(key.value.as_str()) {
            error(key.loc, format!("`{}` given more than once", key.value));
        }
    }

    let mut seen_apps = BTreeSet::new();
    for app in &raw.apps {
        if !seen_apps.insert(app.id.value.as_str()) {
            error(app.id.loc, format!("duplicate app id `{}`", app.id.value));
        }
        let mut declared = BTreeSet::new();
        for item in &app.items {
            if let RawItem::Declare { name, level } = item {
                if !declared.insert(name.value.as_str()) {
                    error(
                        name.loc,
                        format!(
                            "app `{}` declares `{}` more than once",
                            app.id.value, name.value
                        ),
                    );
                }
                if ProtectionLevel::parse(&level.value).is_none() {
                    error(
                        level.loc,
                        format!(
                            "unknown protection level `{}` (expected `normal` or `dangerous`)",
                            level.value
                        ),
                    );
                }
            }
        }
    }

    if let (Some(model), Some(info)) = (model, info) {
        match info.name {
            cs1::MODEL_NAME => {
                match raw.params.iter().find(|(k, _)| k.value == "apps") {
                    None => error(model.loc, "aps_cs1 requires an `apps` count".into()),
                    Some((k, 0)) => error(k.loc, "`apps` must be at least 1".into()),
                    Some(_) => {}
                }
                for app in &raw.apps {
                    error(
                        app.id.loc,
                        "`app` blocks are only valid for custom_permissions".into(),
                    );
                }
            }
            custom::MODEL_NAME if raw.apps.is_empty() => {
                error(
                    model.loc,
                    "custom_permissions requires at least one `app` block".into(),
                );
            }
            _ => {}
        }
        for (key, _) in &raw.params {
            let allowed = info.name == cs1::MODEL_NAME && key.value == "apps";
            if !allowed {
                error(
                    key.loc,
                    format!("`{}` is not a parameter of {}", key.value, info.name),
                );
            }
        }
        let mut seen_checks = BTreeSet::new();
        for check in &raw.checks {
            if !info.invariants.contains(&check.value.as_str()) {
                error(
                    check.loc,
                    format!("model {} has no invariant `{}`", info.name, check.value),
                );
            } else if !seen_checks.insert(check.value.as_str()) {
                error(
                    check.loc,
                    format!("invariant `{}` checked more than once", check.value),
                );
            }
        }
    }

    let declared_anywhere: BTreeSet<&str> = raw
        .apps
        .iter()
        .flat_map(|a| &a.items)
        .filter_map(|i| match i {
            RawItem::Declare { name, .. } => Some(name.value.as_str()),
            RawItem::Request(_) => None,
        })
        .collect();
    for app in &raw.apps {
        for item in &app.items {
            if let RawItem::Request(name) = item {
                if !declared_anywhere.contains(name.value.as_str()) {
                    findings.push(Finding {
                        severity: Severity::Warning,
                        location: name.loc,
                        message: format!(
                            "app `{}` requests `{}`, which no app declares",
                            app.id.value, name.value
                        ),
                    });
                }
            }
        }
    }
    findings
}

/// Builds the definition from a raw scenario that passed [`analyze`].
fn lower(raw: RawScenario) -> ScenarioDef {
    let model = raw.models.into_iter().next().expect("validated").value;
    let info = lookup(&model).expect("validated");
    let apps = raw
        .apps
        .into_iter()
        .map(|app| {
            let mut spec = AppSpec::new(app.id.value);
            for item in app.items {
                match item {
                    RawItem::Declare { name, level } => {
                        let level = ProtectionLevel::parse(&level.value).expect("validated");
                        spec.declares.insert(name.value, level);
                    }
                    RawItem::Request(name) => {
                        spec.requests.insert(name.value);
                    }
                }
            }
            spec
        })
        .collect();
    let checks = if raw.checks.is_empty() {
        info.invariants.iter().map(|s| s.to_string()).collect()
    } else {
        raw.checks.into_iter().map(|c| c.value).collect()
    };
    ScenarioDef {
        model,
        params: raw.params.into_iter().map(|(k, v)| (k.value, v)).collect(),
        apps,
        checks,
        max_states: raw
            .max_states
            .first()
            .map_or(DEFAULT_MAX_STATES as u64, |m| m.value),
    }
}
