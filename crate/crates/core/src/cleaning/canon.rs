//! Attribute validators and the value canonicalization table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{DESCRIPTOR_NAMES, NOT_AVAILABLE};

/// Per-attribute map from observed value to canonical value. Observed values
/// match case-insensitively and ignoring surrounding or repeated whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonTable {
    attributes: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn lookup_key(value: &str) -> String {
    collapse_whitespace(value).to_lowercase()
}

pub fn collapse_whitespace(value: &str) -> String {
    value.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl CanonTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let raw: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(format!("canonicalization table: {e}")))?;
        let mut table = CanonTable::new();
        for (attr, entries) in raw {
            if !DESCRIPTOR_NAMES.contains(&attr.as_str()) {
                return Err(ConfigError::Parse(format!("canonicalization table: unknown attribute {attr:?}")));
            }
            for (observed, canonical) in entries {
                table.insert(&attr, &observed, &canonical);
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json_str(&text)
    }

    pub fn insert(&mut self, attribute: &str, observed: &str, canonical: &str) {
        self.attributes.entry(attribute.to_string()).or_default().insert(lookup_key(observed), canonical.to_string());
    }

    pub fn lookup(&self, attribute: &str, value: &str) -> Option<&str> {
        self.attributes.get(attribute)?.get(&lookup_key(value)).map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.values().all(BTreeMap::is_empty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Identifiers: letters, digits and `-_.:/`, no whitespace.
    Id,
    /// Clock time `H:MM` or `H:MM:SS`, hours up to 47.
    ClockTime,
    /// Free text: printable, trimmed, single-spaced.
    Text,
}

pub fn value_kind(descriptor: &str) -> ValueKind {
    match descriptor {
        "trip_start" | "trip_finish" => ValueKind::ClockTime,
        "route_name" | "route_nickname" | "vehicle_id_vlr_ta" | "bdescription" => ValueKind::Text,
        _ => ValueKind::Id,
    }
}

pub fn is_valid(kind: ValueKind, value: &str) -> bool {
    if value.is_empty() {
        return false;
    }
    if value == NOT_AVAILABLE {
        return true;
    }
    match kind {
        ValueKind::Id => value.chars().all(|c| c.is_ascii_alphanumeric() || "-_.:/".contains(c)),
        ValueKind::ClockTime => valid_clock(value),
        ValueKind::Text => {
            !value.chars().any(char::is_control)
                && value.trim() == value
                && !value.contains("  ")
                && value.split_whitespace().count() == value.split(' ').count()
        }
    }
}

fn valid_clock(value: &str) -> bool {
    let parts: Vec<&str> = value.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return false;
    }
    let num = |s: &str, max: u32, width: std::ops::RangeInclusive<usize>| {
        width.contains(&s.len()) && s.chars().all(|c| c.is_ascii_digit()) && s.parse::<u32>().is_ok_and(|n| n <= max)
    };
    num(parts[0], 47, 1..=2) && parts[1..].iter().all(|p| num(p, 59, 2..=2))
}

/// Outcome of standardizing one present value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Standardized {
    /// Already canonical.
    Valid,
    /// Replaced by the given canonical value.
    Changed(String),
    /// No rule makes the value valid.
    Unrepairable,
}

/// Applies the alias table, then whitespace normalization, and validates.
pub fn standardize(table: &CanonTable, descriptor: &str, value: &str) -> Standardized {
    let kind = value_kind(descriptor);
    if let Some(canonical) = table.lookup(descriptor, value) {
        if canonical != value && is_valid(kind, canonical) {
            return Standardized::Changed(canonical.to_string());
        }
    }
    if is_valid(kind, value) {
        return Standardized::Valid;
    }
    let normalized = match kind {
        ValueKind::Text => collapse_whitespace(value),
        ValueKind::Id | ValueKind::ClockTime => value.trim().to_string(),
    };
    if normalized != value && is_valid(kind, &normalized) {
        Standardized::Changed(normalized)
    } else {
        Standardized::Unrepairable
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validators() {
        assert!(is_valid(ValueKind::Id, "T51-12"));
        assert!(!is_valid(ValueKind::Id, "51 12"));
        assert!(!is_valid(ValueKind::Id, "#?!"));
        assert!(is_valid(ValueKind::ClockTime, "7:05"));
        assert!(is_valid(ValueKind::ClockTime, "25:10:00"));
        assert!(!is_valid(ValueKind::ClockTime, "99:99"));
        assert!(!is_valid(ValueKind::ClockTime, "12:5"));
        assert!(is_valid(ValueKind::Text, "Route 51"));
        assert!(!is_valid(ValueKind::Text, "Route 51 "));
        assert!(!is_valid(ValueKind::Text, "Route  51"));
        assert!(!is_valid(ValueKind::Text, "Route\t51"));
        for kind in [ValueKind::Id, ValueKind::ClockTime, ValueKind::Text] {
            assert!(is_valid(kind, NOT_AVAILABLE));
            assert!(!is_valid(kind, ""));
        }
    }

    #[test]
    fn table_standardizes_case_and_whitespace() {
        let table = CanonTable::from_json_str(r#"{"route_name": {"route 51": "Route 51"}}"#).unwrap();
        assert_eq!(standardize(&table, "route_name", "ROUTE 51 "), Standardized::Changed("Route 51".into()));
        assert_eq!(standardize(&table, "route_name", "ROUTE 51"), Standardized::Changed("Route 51".into()));
        assert_eq!(standardize(&table, "route_name", "Route 51"), Standardized::Valid);
    }

    #[test]
    fn generic_normalization_without_table() {
        let table = CanonTable::new();
        assert_eq!(standardize(&table, "vehicle_id_vlr_ta", " Bus  12"), Standardized::Changed("Bus 12".into()));
        assert_eq!(standardize(&table, "vehicle_id_vab", " 1204 "), Standardized::Changed("1204".into()));
        assert_eq!(standardize(&table, "trip_start", "99:99"), Standardized::Unrepairable);
        assert_eq!(standardize(&table, "vehicle_id_vab", "#?!"), Standardized::Unrepairable);
    }

    #[test]
    fn rejects_unknown_attributes() {
        assert!(CanonTable::from_json_str(r#"{"colour": {"x": "y"}}"#).is_err());
        assert!(CanonTable::from_json_str("[]").is_err());
    }
}
