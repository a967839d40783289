use std::collections::HashMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::model::pointer;
use crate::model::{MatchMode, MatchOverride};

/// Relative numeric tolerance used when a caller does not choose one.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("invalid pattern at `{path}`: {reason}")]
    InvalidPattern { path: String, reason: String },
    #[error("tolerance must be a non-negative number, got {0}")]
    InvalidTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MismatchKind {
    Missing,
    Extra,
    Type,
    Value,
    Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    /// JSON pointer into the expected/actual document.
    pub path: String,
    pub kind: MismatchKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub equal: bool,
    pub mismatches: Vec<Mismatch>,
}

impl ComparisonVerdict {
    fn from_mismatches(mismatches: Vec<Mismatch>) -> Self {
        Self {
            equal: mismatches.is_empty(),
            mismatches,
        }
    }

    /// Verdict for a case whose function produced no output at all.
    pub fn no_output(detail: impl Into<String>) -> Self {
        Self::from_mismatches(vec![Mismatch {
            path: String::new(),
            kind: MismatchKind::Missing,
            detail: detail.into(),
        }])
    }
}

enum Rule {
    Exact,
    Present,
    Pattern(Regex),
}

struct Walker {
    rules: HashMap<String, Rule>,
    tolerance: f64,
    out: Vec<Mismatch>,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn short(v: &Value) -> String {
    let text = v.to_string();
    if text.chars().count() > 80 {
        let cut: String = text.chars().take(77).collect();
        format!("{cut}...")
    } else {
        text
    }
}

fn as_int(n: &Number) -> Option<i128> {
    n.as_i64()
        .map(i128::from)
        .or_else(|| n.as_u64().map(i128::from))
}

fn numbers_match(expected: &Number, actual: &Number, tolerance: f64) -> bool {
    if let (Some(e), Some(a)) = (as_int(expected), as_int(actual)) {
        return e == a;
    }
    let (Some(e), Some(a)) = (expected.as_f64(), actual.as_f64()) else {
        return false;
    };
    if e == a {
        return true;
    }
    let diff = (a - e).abs();
    if e == 0.0 {
        diff <= tolerance
    } else {
        diff / e.abs() <= tolerance
    }
}

impl Walker {
    fn push(&mut self, path: &str, kind: MismatchKind, detail: String) {
        self.out.push(Mismatch {
            path: path.to_string(),
            kind,
            detail,
        });
    }

    fn check_pattern(&mut self, path: &str, re: &Regex, actual: &Value) {
        match actual {
            Value::String(s) if re.is_match(s) => {}
            Value::String(s) => self.push(
                path,
                MismatchKind::Pattern,
                format!("{s:?} does not match /{}/", re.as_str()),
            ),
            other => self.push(
                path,
                MismatchKind::Pattern,
                format!(
                    "expected a string matching /{}/, got {}",
                    re.as_str(),
                    type_name(other)
                ),
            ),
        }
    }

    fn walk(&mut self, path: &str, expected: &Value, actual: &Value, exact: bool) {
        let mut exact = exact;
        match self.rules.get(path) {
            Some(Rule::Present) => return,
            Some(Rule::Pattern(re)) => {
                let re = re.clone();
                self.check_pattern(path, &re, actual);
                return;
            }
            Some(Rule::Exact) => exact = true,
            None => {}
        }
        match (expected, actual) {
            (Value::Object(e), Value::Object(a)) => self.walk_object(path, e, a, exact),
            (Value::Array(e), Value::Array(a)) => {
                for (i, (ev, av)) in e.iter().zip(a).enumerate() {
                    self.walk(&pointer::child(path, &i.to_string()), ev, av, exact);
                }
                for (i, ev) in e.iter().enumerate().skip(a.len()) {
                    self.push(
                        &pointer::child(path, &i.to_string()),
                        MismatchKind::Missing,
                        format!("expected {}", short(ev)),
                    );
                }
                for (i, av) in a.iter().enumerate().skip(e.len()) {
                    self.push(
                        &pointer::child(path, &i.to_string()),
                        MismatchKind::Extra,
                        format!("unexpected {}", short(av)),
                    );
                }
            }
            (Value::Number(e), Value::Number(a)) => {
                let tolerance = if exact { 0.0 } else { self.tolerance };
                if !numbers_match(e, a, tolerance) {
                    self.push(path, MismatchKind::Value, format!("expected {e}, got {a}"));
                }
            }
            (e, a) if type_name(e) != type_name(a) => self.push(
                path,
                MismatchKind::Type,
                format!(
                    "expected {}, got {} {}",
                    type_name(e),
                    type_name(a),
                    short(a)
                ),
            ),
            (e, a) => {
                if e != a {
                    self.push(
                        path,
                        MismatchKind::Value,
                        format!("expected {}, got {}", short(e), short(a)),
                    );
                }
            }
        }
    }

    fn walk_object(
        &mut self,
        path: &str,
        e: &Map<String, Value>,
        a: &Map<String, Value>,
        exact: bool,
    ) {
        // Sorted traversal keeps mismatch order independent of key order.
        let mut keys: Vec<&String> = e.keys().collect();
        keys.sort();
        for key in keys {
            let child = pointer::child(path, key);
            match a.get(key) {
                Some(av) => self.walk(&child, &e[key], av, exact),
                None => self.push(
                    &child,
                    MismatchKind::Missing,
                    format!("expected {}", short(&e[key])),
                ),
            }
        }
        let mut extra: Vec<&String> = a.keys().filter(|k| !e.contains_key(*k)).collect();
        extra.sort();
        for key in extra {
            let child = pointer::child(path, key);
            match self.rules.get(&child) {
                Some(Rule::Present) => {}
                Some(Rule::Pattern(re)) => {
                    let re = re.clone();
                    self.check_pattern(&child, &re, &a[key]);
                }
                _ => self.push(
                    &child,
                    MismatchKind::Extra,
                    format!("unexpected {}", short(&a[key])),
                ),
            }
        }
    }
}

/// Semantic equality of two JSON responses.
///
/// Objects ignore key order, arrays do not. Numbers that are both integers
/// compare exactly; otherwise they are equal when their relative difference is
/// at most `tolerance` (absolute difference when `expected` is zero). Overrides
/// relax or tighten the rule at individual JSON pointers.
pub fn compare_json(
    expected: &Value,
    actual: &Value,
    overrides: &[MatchOverride],
    tolerance: f64,
) -> Result<ComparisonVerdict, CompareError> {
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(CompareError::InvalidTolerance(tolerance));
    }
    let mut rules = HashMap::new();
    for o in overrides {
        let rule = match &o.mode {
            MatchMode::Exact => Rule::Exact,
            MatchMode::Present => Rule::Present,
            MatchMode::Pattern { pattern } => {
                Rule::Pattern(
                    Regex::new(pattern).map_err(|e| CompareError::InvalidPattern {
                        path: o.path.clone(),
                        reason: e.to_string(),
                    })?,
                )
            }
        };
        rules.insert(o.path.clone(), rule);
    }
    let mut walker = Walker {
        rules,
        tolerance,
        out: Vec::new(),
    };
    walker.walk("", expected, actual, false);
    Ok(ComparisonVerdict::from_mismatches(walker.out))
}
