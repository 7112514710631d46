//! Validation verdicts with machine-readable witnesses.

use serde::Serialize;
use serde_json::{json, Value};

/// One failed check. `rule` is a stable dotted identifier such as
/// `"fms.compatibility"`; `witness` carries whatever data pins the failure
/// down (cell indices, vertex sets, conflicting matchings, ...).
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub rule: String,
    pub message: String,
    pub witness: Value,
}

impl Violation {
    pub fn new(rule: &str, message: impl Into<String>, witness: Value) -> Self {
        Violation {
            rule: rule.to_string(),
            message: message.into(),
            witness,
        }
    }
}

/// Outcome of validating one object against one axiom set.
///
/// `verdict` is true exactly when `violations` is empty; the `checked` list
/// names every rule that was exercised, so a pass is distinguishable from a
/// rule that never ran.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub verdict: bool,
    pub checked: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport {
            verdict: true,
            checked: Vec::new(),
            violations: Vec::new(),
        }
    }

    pub fn mark_checked(&mut self, rule: &str) {
        if !self.checked.iter().any(|r| r == rule) {
            self.checked.push(rule.to_string());
        }
    }

    pub fn push(&mut self, violation: Violation) {
        self.mark_checked(&violation.rule);
        self.verdict = false;
        self.violations.push(violation);
    }

    pub fn fail(&mut self, rule: &str, message: impl Into<String>, witness: Value) {
        self.push(Violation::new(rule, message, witness));
    }

    pub fn absorb(&mut self, other: ValidationReport) {
        for rule in other.checked {
            self.mark_checked(&rule);
        }
        for v in other.violations {
            self.push(v);
        }
    }

    /// First violation of a given rule, if any. Convenient in tests.
    pub fn first(&self, rule: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.rule == rule)
    }

    pub fn summary(&self) -> String {
        if self.verdict {
            format!("valid ({} rules checked)", self.checked.len())
        } else {
            let mut lines: Vec<String> = self
                .violations
                .iter()
                .map(|v| format!("{}: {}", v.rule, v.message))
                .collect();
            lines.truncate(8);
            lines.join("; ")
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "checked": self.checked,
            "violations": self.violations,
        })
    }
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.summary())
    }
}
