//! Structured norm values: every norm returns its value together with the
//! breakdown it was assembled from and the argmax witnesses, so any reported
//! number can be recomputed from its witness.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Result;

/// What realized an entry's value: a block scale, a grid point, or a point
/// pair with optional sector/derivative labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    Block { j: i32, point: usize },
    Point { point: usize },
    Pair { x: usize, y: usize, sector: Option<String>, deriv: Option<Vec<u32>> },
    None,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormEntry {
    pub label: String,
    pub value: f64,
    pub witness: Witness,
}

/// One additive contribution to a norm; its value is the max of its entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormPart {
    pub name: String,
    pub value: f64,
    pub entries: Vec<NormEntry>,
}

impl NormPart {
    pub fn from_entries(name: impl Into<String>, entries: Vec<NormEntry>) -> Self {
        let value = entries.iter().map(|e| e.value).fold(0.0, f64::max);
        Self { name: name.into(), value, entries }
    }

    pub fn argmax(&self) -> Option<&NormEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// A norm value with its full breakdown. The value is the sum over parts;
/// single-part norms are plain maxima over their entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub parts: Vec<NormPart>,
    /// Raised conditions (e.g. a violated side condition); empty when clean.
    pub flags: Vec<String>,
}

impl NormReport {
    pub fn from_parts(parts: Vec<NormPart>) -> Self {
        let value = parts.iter().map(|p| p.value).sum();
        Self { value, parts, flags: Vec::new() }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn part(&self, name: &str) -> Option<&NormPart> {
        self.parts.iter().find(|p| p.name == name)
    }

    /// The single largest entry across all parts.
    pub fn argmax(&self) -> Option<(&NormPart, &NormEntry)> {
        self.parts
            .iter()
            .filter_map(|p| p.argmax().map(|e| (p, e)))
            .max_by(|a, b| a.1.value.partial_cmp(&b.1.value).unwrap_or(std::cmp::Ordering::Equal))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-entry contributions as CSV (part, label, value, witness).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["part", "label", "value", "witness"])?;
        for p in &self.parts {
            for e in &p.entries {
                w.write_record([
                    p.name.as_str(),
                    e.label.as_str(),
                    &format!("{:.17e}", e.value),
                    &serde_json::to_string(&e.witness)?,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(label: &str, value: f64) -> NormEntry {
        NormEntry { label: label.into(), value, witness: Witness::None }
    }

    #[test]
    fn part_value_is_max_and_report_value_is_sum() {
        let a = NormPart::from_entries("blocks", vec![entry("j=-1", 0.5), entry("j=0", 2.0)]);
        assert_eq!(a.value, 2.0);
        assert_eq!(a.argmax().unwrap().label, "j=0");
        let b = NormPart::from_entries("pairs", vec![entry("l=0", 1.25)]);
        let r = NormReport::from_parts(vec![a, b]);
        assert_eq!(r.value, 3.25);
        assert_eq!(r.argmax().unwrap().1.label, "j=0");
        assert!(!r.is_flagged());
    }

    #[test]
    fn json_roundtrip_preserves_breakdown() {
        let r = NormReport::from_parts(vec![NormPart::from_entries(
            "blocks",
            vec![NormEntry {
                label: "j=3".into(),
                value: 1.5,
                witness: Witness::Block { j: 3, point: 42 },
            }],
        )]);
        let s = r.to_json().unwrap();
        let back: NormReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.value, r.value);
        assert_eq!(back.parts[0].entries[0].witness, Witness::Block { j: 3, point: 42 });
    }
}
