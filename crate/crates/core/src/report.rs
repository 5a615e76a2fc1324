//! Uniform output records shared by every experiment.
//!
//! An [`EnergyReport`] is an ordered, named, additive breakdown of an energy
//! together with the provenance needed to reproduce it and the list of
//! invariant checks that were evaluated while producing it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one invariant or acceptance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Signed slack of the inequality or residual that was tested.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, margin: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            margin,
            detail: detail.into(),
        }
    }

    /// `lhs >= rhs - slack`.
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64) -> Self {
        let margin = lhs - rhs;
        Check::new(name, margin >= -slack, margin, format!("{lhs:e} >= {rhs:e} (slack {slack:e})"))
    }

    /// `value < bound`.
    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check::new(name, value < bound, bound - value, format!("{value:e} < {bound:e}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub total: f64,
    pub provenance: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl EnergyReport {
    pub fn new(name: impl Into<String>) -> Self {
        EnergyReport {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Adds a term that contributes to `total`.
    pub fn term(mut self, name: impl Into<String>, value: f64) -> Self {
        self.total += value;
        self.terms.push((name.into(), value));
        self
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Formats a float with 17 significant digits, the form used in CSV artifacts.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_accumulate_into_total() {
        let r = EnergyReport::new("x").term("a", 1.5).term("b", -4.0);
        assert_eq!(r.total, -2.5);
        assert_eq!(r.get("b"), Some(-4.0));
        assert_eq!(r.get("c"), None);
    }

    #[test]
    fn fmt17_round_trips() {
        let x = std::f64::consts::PI / 7.0;
        assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
    }
}
