//! Parsing of metric and lattice arguments.

use std::path::Path;

use nalgebra::Matrix3;
use nil_core::LeftInvariantMetric;
use nil_lattice::{default_catalog, gamma, Lattice};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum GramJson {
    Metric(LeftInvariantMetric),
    Flat([f64; 9]),
    Rows([[f64; 3]; 3]),
}

fn metric_from_json(text: &str) -> Option<std::result::Result<LeftInvariantMetric, String>> {
    let parsed: GramJson = serde_json::from_str(text).ok()?;
    let m = match parsed {
        GramJson::Metric(g) => return Some(Ok(g)),
        GramJson::Flat(v) => Matrix3::from_row_slice(&v),
        GramJson::Rows(r) => Matrix3::from_fn(|i, j| r[i][j]),
    };
    Some(LeftInvariantMetric::new(m).map_err(|e| e.to_string()))
}

/// `identity` (or `standard`), inline JSON, or a path to a JSON file. Returns the metric and
/// the file contents when one was read.
pub fn parse_metric(text: &str) -> Result<(LeftInvariantMetric, Option<Vec<u8>>)> {
    if matches!(text, "identity" | "standard") {
        return Ok((LeftInvariantMetric::standard(), None));
    }
    let invalid = |e: String| CliError::usage(format!("g0: {e}"));
    if let Some(g) = metric_from_json(text) {
        return g.map(|g| (g, None)).map_err(invalid);
    }
    let bytes = std::fs::read(text).map_err(|e| CliError::usage(format!("g0 {text:?} is neither a metric nor a readable file: {e}")))?;
    let contents = String::from_utf8_lossy(&bytes);
    match metric_from_json(&contents) {
        Some(g) => g.map(|g| (g, Some(bytes))).map_err(invalid),
        None => Err(CliError::usage(format!("g0 file {text:?} does not hold a Gram matrix"))),
    }
}

/// `Gamma<k>`, `Γ<k>` or the label of a shipped lattice.
pub fn lattice_by_label(label: &str) -> Result<Lattice> {
    let k = label.strip_prefix("Gamma").or_else(|| label.strip_prefix('Γ')).and_then(|s| s.parse::<u32>().ok());
    if let Some(k) = k.filter(|&k| k > 0) {
        return Ok(gamma(k));
    }
    default_catalog()
        .into_iter()
        .find(|l| l.label == label)
        .ok_or_else(|| CliError::usage(format!("unknown lattice {label:?}")))
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}
