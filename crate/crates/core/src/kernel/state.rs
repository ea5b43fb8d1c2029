//! Finite-domain variable schemas and the canonical state encoding.
//!
//! Every model state is lowered to an [`Assignment`] (variable -> key -> value)
//! and encoded against a [`Schema`] into one domain code per cell. Cells are
//! laid out in variable declaration order, then key declaration order, so two
//! states are equal exactly when their encodings are byte-identical.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single value drawn from a variable's finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Text(String),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Text(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Int(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

/// A model variable: one cell per key (usually per app), each holding a
/// value from `domain`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub keys: Vec<String>,
    pub domain: Vec<Value>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, keys: Vec<String>, domain: Vec<Value>) -> Self {
        Self {
            name: name.into(),
            keys,
            domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("variable `{0}` is declared twice")]
    DuplicateVariable(String),
    #[error("variable `{var}` declares key `{key}` twice")]
    DuplicateKey { var: String, key: String },
    #[error("variable `{var}` declares value {value} twice in its domain")]
    DuplicateValue { var: String, value: Value },
    #[error("variable `{var}` has {size} domain values; at most 256 are supported")]
    DomainTooLarge { var: String, size: usize },
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("value {value} of `{var}[{key}]` is outside the declared domain")]
    OutOfDomain {
        var: String,
        key: String,
        value: Value,
    },
    #[error("assignment has no value for `{var}[{key}]`")]
    Missing { var: String, key: String },
    #[error("assignment mentions undeclared variable `{0}`")]
    UnknownVariable(String),
    #[error("assignment mentions undeclared key `{var}[{key}]`")]
    UnknownKey { var: String, key: String },
}

/// Total assignment of values to every `(variable, key)` cell.
pub type Assignment = BTreeMap<String, BTreeMap<String, Value>>;

/// The canonical encoding of a state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Box<[u8]>);

impl State {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State({:?})", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    vars: Vec<VarDecl>,
}

impl Schema {
    pub fn new(vars: Vec<VarDecl>) -> Result<Self, SchemaError> {
        for (i, var) in vars.iter().enumerate() {
            if vars[..i].iter().any(|v| v.name == var.name) {
                return Err(SchemaError::DuplicateVariable(var.name.clone()));
            }
            if var.domain.is_empty() {
                return Err(SchemaError::EmptyDomain(var.name.clone()));
            }
            if var.domain.len() > 256 {
                return Err(SchemaError::DomainTooLarge {
                    var: var.name.clone(),
                    size: var.domain.len(),
                });
            }
            for (j, key) in var.keys.iter().enumerate() {
                if var.keys[..j].contains(key) {
                    return Err(SchemaError::DuplicateKey {
                        var: var.name.clone(),
                        key: key.clone(),
                    });
                }
            }
            for (j, value) in var.domain.iter().enumerate() {
                if var.domain[..j].contains(value) {
                    return Err(SchemaError::DuplicateValue {
                        var: var.name.clone(),
                        value: value.clone(),
                    });
                }
            }
        }
        Ok(Self { vars })
    }

    pub fn vars(&self) -> &[VarDecl] {
        &self.vars
    }

    /// Number of cells (bytes) in every encoded state.
    pub fn width(&self) -> usize {
        self.vars.iter().map(|v| v.keys.len()).sum()
    }

    /// Encodes a total assignment. Fails if a cell is missing, undeclared, or
    /// holds a value outside its variable's domain.
    pub fn encode(&self, assignment: &Assignment) -> Result<State, DomainError> {
        for (var, cells) in assignment {
            let decl = self
                .vars
                .iter()
                .find(|d| &d.name == var)
                .ok_or_else(|| DomainError::UnknownVariable(var.clone()))?;
            if let Some(key) = cells.keys().find(|k| !decl.keys.contains(k)) {
                return Err(DomainError::UnknownKey {
                    var: var.clone(),
                    key: key.clone(),
                });
            }
        }

        let mut bytes = Vec::with_capacity(self.width());
        for decl in &self.vars {
            let cells = assignment.get(&decl.name);
            for key in &decl.keys {
                let value = cells
                    .and_then(|c| c.get(key))
                    .ok_or_else(|| DomainError::Missing {
                        var: decl.name.clone(),
                        key: key.clone(),
                    })?;
                let code = decl.domain.iter().position(|d| d == value).ok_or_else(|| {
                    DomainError::OutOfDomain {
                        var: decl.name.clone(),
                        key: key.clone(),
                        value: value.clone(),
                    }
                })?;
                bytes.push(code as u8);
            }
        }
        Ok(State(bytes.into_boxed_slice()))
    }

    /// Decodes a state back into `(variable, [(key, value)])` rows in
    /// declaration order.
    ///
    /// Panics if `state` was not produced by this schema.
    pub fn rows<'a>(&'a self, state: &'a State) -> Vec<(&'a str, Vec<(&'a str, &'a Value)>)> {
        assert_eq!(state.0.len(), self.width(), "state does not match schema");
        let mut codes = state.0.iter();
        self.vars
            .iter()
            .map(|decl| {
                let cells = decl
                    .keys
                    .iter()
                    .map(|key| {
                        let code = *codes.next().expect("width checked above") as usize;
                        (key.as_str(), &decl.domain[code])
                    })
                    .collect();
                (decl.name.as_str(), cells)
            })
            .collect()
    }

    pub fn decode(&self, state: &State) -> Assignment {
        self.rows(state)
            .into_iter()
            .map(|(var, cells)| {
                let cells = cells
                    .into_iter()
                    .map(|(k, v)| (k.to_owned(), v.clone()))
                    .collect();
                (var.to_owned(), cells)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<Value> {
        vec!["".into(), "NOR".into(), "DAN".into()]
    }

    fn apps(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("a{i}")).collect()
    }

    fn cs1_schema(n: usize) -> Schema {
        Schema::new(vec![
            VarDecl::new("askedPerms", apps(n), levels()),
            VarDecl::new("grantedPerms", apps(n), levels()),
            VarDecl::new("alreadyInstalled", apps(n), vec![0.into(), 1.into()]),
        ])
        .unwrap()
    }

    fn init(n: usize) -> Assignment {
        let mut a = Assignment::new();
        for var in ["askedPerms", "grantedPerms"] {
            a.insert(
                var.into(),
                apps(n).into_iter().map(|k| (k, "".into())).collect(),
            );
        }
        a.insert(
            "alreadyInstalled".into(),
            apps(n).into_iter().map(|k| (k, 0.into())).collect(),
        );
        a
    }

    #[test]
    fn identical_assignments_encode_identically() {
        let schema = cs1_schema(2);
        assert_eq!(
            schema.encode(&init(2)).unwrap(),
            schema.encode(&init(2)).unwrap()
        );
    }

    #[test]
    fn one_differing_cell_changes_encoding() {
        let schema = cs1_schema(2);
        let mut other = init(2);
        other
            .get_mut("askedPerms")
            .unwrap()
            .insert("a2".into(), "NOR".into());
        assert_ne!(
            schema.encode(&init(2)).unwrap(),
            schema.encode(&other).unwrap()
        );
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let schema = cs1_schema(2);
        let mut reversed = Assignment::new();
        reversed.insert(
            "alreadyInstalled".into(),
            [
                ("a2".to_string(), Value::Int(0)),
                ("a1".to_string(), Value::Int(0)),
            ]
            .into_iter()
            .collect(),
        );
        for var in ["grantedPerms", "askedPerms"] {
            let mut cells = BTreeMap::new();
            cells.insert("a2".to_string(), Value::from(""));
            cells.insert("a1".to_string(), Value::from(""));
            reversed.insert(var.into(), cells);
        }
        let state = schema.encode(&reversed).unwrap();
        assert_eq!(state, schema.encode(&init(2)).unwrap());
        assert_eq!(state.as_bytes(), &[0u8; 6]);
    }

    #[test]
    fn out_of_domain_names_variable_and_key() {
        let schema = cs1_schema(1);
        let mut bad = init(1);
        bad.get_mut("grantedPerms")
            .unwrap()
            .insert("a1".into(), "ROOT".into());
        let err = schema.encode(&bad).unwrap_err();
        assert_eq!(
            err,
            DomainError::OutOfDomain {
                var: "grantedPerms".into(),
                key: "a1".into(),
                value: "ROOT".into()
            }
        );
        assert!(err.to_string().contains("grantedPerms[a1]"));
    }

    #[test]
    fn partial_and_extra_assignments_are_rejected() {
        let schema = cs1_schema(2);
        let mut partial = init(2);
        partial.get_mut("alreadyInstalled").unwrap().remove("a2");
        assert!(matches!(
            schema.encode(&partial),
            Err(DomainError::Missing { .. })
        ));

        let mut extra = init(2);
        extra
            .get_mut("askedPerms")
            .unwrap()
            .insert("a3".into(), "".into());
        assert!(matches!(
            schema.encode(&extra),
            Err(DomainError::UnknownKey { .. })
        ));

        let mut unknown = init(2);
        unknown.insert("bogus".into(), BTreeMap::new());
        assert!(matches!(
            schema.encode(&unknown),
            Err(DomainError::UnknownVariable(_))
        ));
    }

    #[test]
    fn decode_inverts_encode() {
        let schema = cs1_schema(3);
        let mut a = init(3);
        a.get_mut("grantedPerms")
            .unwrap()
            .insert("a3".into(), "DAN".into());
        let state = schema.encode(&a).unwrap();
        assert_eq!(schema.decode(&state), a);
    }

    #[test]
    fn schema_rejects_malformed_declarations() {
        let dup = Schema::new(vec![
            VarDecl::new("x", apps(1), levels()),
            VarDecl::new("x", apps(1), levels()),
        ]);
        assert_eq!(dup.unwrap_err(), SchemaError::DuplicateVariable("x".into()));
        let big = Schema::new(vec![VarDecl::new(
            "x",
            apps(1),
            (0..300).map(Value::Int).collect(),
        )]);
        assert!(matches!(big, Err(SchemaError::DomainTooLarge { .. })));
        assert!(matches!(
            Schema::new(vec![VarDecl::new("x", apps(1), vec![])]),
            Err(SchemaError::EmptyDomain(_))
        ));
    }
}
