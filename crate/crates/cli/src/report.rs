//! Structured run reports.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Bound on `measured`; `None` for checks that are exact.
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance: Some(tolerance), pass: measured <= tolerance }
    }

    /// `|measured − target| ≤ tolerance`; `measured` is stored as given.
    pub fn near(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance: Some(tolerance), pass: (measured - target).abs() <= tolerance }
    }

    pub fn exact(name: impl Into<String>, measured: f64, pass: bool) -> Self {
        Self { name: name.into(), measured, tolerance: None, pass }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub inputs: Vec<InputHash>,
    /// The resolved configuration.
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            config: serde_json::to_value(config).unwrap_or_default(),
            checks: Vec::new(),
            pass: true,
            details: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.push(InputHash { name: name.into(), sha256: sha256_hex(bytes) });
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn details(&mut self, value: &impl Serialize) {
        self.details = serde_json::to_value(value).unwrap_or_default();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_the_report() {
        let mut r = Report::new("t", &());
        r.check(Check::at_most("a", 1.0, 2.0));
        assert!(r.pass);
        r.check(Check::near("b", 1.5, 1.0, 0.1));
        assert!(!r.pass);
        assert!(r.to_json().contains("\"pass\": false"));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("a", f64::NAN, 1.0).pass);
        assert!(!Check::near("a", f64::NAN, 1.0, 1.0).pass);
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
