use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// One verified statement: computed quantities, the bounds they are held to, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The statement this check exercises.
    pub anchor: String,
    pub computed: BTreeMap<String, Value>,
    pub bounds: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            computed: BTreeMap::new(),
            bounds: BTreeMap::new(),
            pass: false,
            note: None,
        }
    }

    pub fn value(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.computed.insert(key.to_string(), v.into());
        self
    }

    pub fn bound(mut self, key: &str, v: f64) -> Self {
        self.bounds.insert(key.to_string(), v);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }

    pub fn verdict(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub model: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(command: &str, model: &str, seed: u64, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            command: command.to_string(),
            model: model.to_string(),
            seed,
            checks,
            pass,
        }
    }

    pub fn failing(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }
}
