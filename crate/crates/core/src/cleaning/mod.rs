//! Trip-level cleaning: attribute repair, duplicate removal, missing-tuple
//! detection and sparse-trip elimination.
//!
//! [`clean_dataset`] runs the steps in that order and returns trips grouped by
//! [`TripKey`], each sorted by timestamp, together with a [`CleanReport`].

mod canon;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use canon::{
    collapse_whitespace, is_valid, lookup_key, standardize, value_kind, CanonTable, Standardized, ValueKind,
};

use crate::model::{
    is_essential_slot, CleanTuple, Descriptors, LatLng, RawTuple, Timestamp, TripKey, DESCRIPTOR_NAMES, LAT_SLOT,
    LNG_SLOT, NOT_AVAILABLE, TIMESTAMP_SLOT,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanConfig {
    pub cadence_s: i64,
    pub sparse_trip_threshold: u64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig { cadence_s: 5, sparse_trip_threshold: 100 }
    }
}

/// Counts per defect class. Counters of a tuple that ends up deleted are not
/// included in `attributes_set_na` or `values_standardized`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub input_total: u64,
    pub output_total: u64,
    pub missing_tuples_detected: u64,
    pub trips_dropped_sparse: u64,
    pub tuples_in_dropped_trips: u64,
    pub duplicates_removed: u64,
    pub duplicate_conflicts: u64,
    pub attributes_set_na: u64,
    pub tuples_deleted: u64,
    pub redundant_attributes_stripped: u64,
    pub values_standardized: u64,
    pub trips_retained: u64,
    pub dropped_trips: Vec<String>,
}

impl CleanReport {
    /// `input − duplicates − deleted − tuples in dropped trips = output`.
    pub fn is_conserved(&self) -> bool {
        self.input_total.checked_sub(self.duplicates_removed + self.tuples_deleted + self.tuples_in_dropped_trips)
            == Some(self.output_total)
    }

    /// True when cleaning changed nothing.
    pub fn is_identity(&self) -> bool {
        self.input_total == self.output_total
            && self.trips_dropped_sparse == 0
            && self.duplicates_removed == 0
            && self.attributes_set_na == 0
            && self.tuples_deleted == 0
            && self.redundant_attributes_stripped == 0
            && self.values_standardized == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanTrip {
    pub key: TripKey,
    pub tuples: Vec<CleanTuple>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutput {
    pub trips: Vec<CleanTrip>,
    pub report: CleanReport,
}

impl CleanOutput {
    pub fn tuples(&self) -> impl Iterator<Item = &CleanTuple> {
        self.trips.iter().flat_map(|t| t.tuples.iter())
    }

    pub fn into_tuples(self) -> Vec<CleanTuple> {
        self.trips.into_iter().flat_map(|t| t.tuples).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepairStats {
    pub set_na: u64,
    pub stripped: u64,
    pub standardized: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeleteReason {
    MissingEssential(&'static str),
    InvalidPosition,
    BadTimestamp,
    Unkeyable(String),
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum RepairVerdict {
    Keep(CleanTuple, RepairStats),
    Delete(DeleteReason, RepairStats),
}

/// Strips extra attributes, standardizes descriptors, fills missing
/// non-essential descriptors with `N/A` and rejects tuples whose essential
/// attributes cannot be recovered.
pub fn repair_attributes(tuple: &RawTuple, table: &CanonTable) -> RepairVerdict {
    let mut stats = RepairStats { stripped: tuple.extra.len() as u64, ..Default::default() };
    let mut descriptors = Descriptors::default();
    for (slot, name) in DESCRIPTOR_NAMES.iter().enumerate() {
        let present = tuple.values[slot].as_deref().filter(|v| !v.trim().is_empty());
        let repaired = present.and_then(|value| match standardize(table, name, value) {
            Standardized::Valid => Some(value.to_string()),
            Standardized::Changed(canonical) => {
                stats.standardized += 1;
                Some(canonical)
            }
            Standardized::Unrepairable => None,
        });
        let repaired = repaired.filter(|v| !(is_essential_slot(slot) && v == NOT_AVAILABLE));
        descriptors.0[slot] = match repaired {
            Some(v) => v,
            None if is_essential_slot(slot) => {
                return RepairVerdict::Delete(DeleteReason::MissingEssential(name), stats)
            }
            None => {
                stats.set_na += 1;
                NOT_AVAILABLE.to_string()
            }
        };
    }

    let mut coordinate = |slot: usize| -> Option<f64> {
        let raw = tuple.values[slot].as_deref()?;
        if let Ok(v) = raw.parse::<f64>() {
            return Some(v);
        }
        let v = raw.trim().parse::<f64>().ok()?;
        stats.standardized += 1;
        Some(v)
    };
    let (Some(lat), Some(lng)) = (coordinate(LAT_SLOT), coordinate(LNG_SLOT)) else {
        return RepairVerdict::Delete(DeleteReason::MissingEssential("lat/lng"), stats);
    };
    let position = LatLng::new(lat, lng);
    if !position.is_valid() {
        return RepairVerdict::Delete(DeleteReason::InvalidPosition, stats);
    }
    let Some(timestamp) = tuple.values[TIMESTAMP_SLOT].as_deref().and_then(|s| Timestamp::parse(s).ok()) else {
        return RepairVerdict::Delete(DeleteReason::BadTimestamp, stats);
    };
    let clean = CleanTuple { seq: tuple.seq, descriptors, position, timestamp };
    if let Err(e) = clean.key() {
        return RepairVerdict::Delete(DeleteReason::Unkeyable(e.to_string()), stats);
    }
    RepairVerdict::Keep(clean, stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    /// Timestamp of the tuple before the gap.
    pub after: Timestamp,
    pub delta_s: i64,
    pub missing: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MissingReport {
    pub missing: u64,
    pub gaps: Vec<Gap>,
}

/// Counts `round(Δt / cadence) − 1` missing tuples for every gap longer than
/// 1.5 cadences. Expects timestamp-sorted tuples of one trip.
pub fn detect_missing(timestamps: &[Timestamp], cadence_s: i64) -> MissingReport {
    let mut report = MissingReport::default();
    for pair in timestamps.windows(2) {
        let delta = pair[1].0 - pair[0].0;
        if 2 * delta > 3 * cadence_s {
            let missing = (delta as f64 / cadence_s as f64).round() as u64 - 1;
            report.missing += missing;
            report.gaps.push(Gap { after: pair[0], delta_s: delta, missing });
        }
    }
    report
}

/// Splits trips into retained ones and the keys of those with at least
/// `threshold` missing tuples.
pub fn drop_sparse_trips<T>(trips: Vec<(TripKey, T, u64)>, threshold: u64) -> (Vec<(TripKey, T)>, Vec<TripKey>) {
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for (key, trip, missing) in trips {
        if missing >= threshold {
            dropped.push(key);
        } else {
            retained.push((key, trip));
        }
    }
    (retained, dropped)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupStats {
    pub removed: u64,
    /// Duplicates whose position or descriptors differ from the survivor.
    pub conflicts: u64,
}

/// Keeps one tuple per timestamp: the one with the smallest ingest sequence
/// number. Output is sorted by timestamp.
pub fn dedup(mut tuples: Vec<CleanTuple>) -> (Vec<CleanTuple>, DedupStats) {
    tuples.sort_by_key(|t| (t.timestamp, t.seq));
    let mut stats = DedupStats::default();
    let mut kept: Vec<CleanTuple> = Vec::with_capacity(tuples.len());
    for t in tuples {
        match kept.last() {
            Some(prev) if prev.timestamp == t.timestamp => {
                stats.removed += 1;
                if prev.position != t.position || prev.descriptors != t.descriptors {
                    stats.conflicts += 1;
                }
            }
            _ => kept.push(t),
        }
    }
    (kept, stats)
}

/// Repair, dedup, missing detection and sparse-trip drop, in that order.
pub fn clean_dataset<I>(input: I, table: &CanonTable, config: &CleanConfig) -> CleanOutput
where
    I: IntoIterator<Item = RawTuple>,
{
    let mut report = CleanReport::default();
    let mut groups: BTreeMap<TripKey, Vec<CleanTuple>> = BTreeMap::new();
    for raw in input {
        report.input_total += 1;
        report.redundant_attributes_stripped += raw.extra.len() as u64;
        match repair_attributes(&raw, table) {
            RepairVerdict::Keep(tuple, stats) => {
                report.attributes_set_na += stats.set_na;
                report.values_standardized += stats.standardized;
                let key = tuple.key().expect("repair verdict guarantees a key");
                groups.entry(key).or_default().push(tuple);
            }
            RepairVerdict::Delete(..) => report.tuples_deleted += 1,
        }
    }

    let mut scored = Vec::with_capacity(groups.len());
    for (key, tuples) in groups {
        let (kept, stats) = dedup(tuples);
        report.duplicates_removed += stats.removed;
        report.duplicate_conflicts += stats.conflicts;
        let timestamps: Vec<Timestamp> = kept.iter().map(|t| t.timestamp).collect();
        let missing = detect_missing(&timestamps, config.cadence_s).missing;
        report.missing_tuples_detected += missing;
        scored.push((key, kept, missing));
    }

    let sizes: BTreeMap<TripKey, usize> = scored.iter().map(|(k, t, _)| (k.clone(), t.len())).collect();
    let (retained, dropped) = drop_sparse_trips(scored, config.sparse_trip_threshold);
    report.trips_dropped_sparse = dropped.len() as u64;
    report.tuples_in_dropped_trips = dropped.iter().map(|k| sizes[k] as u64).sum();
    report.dropped_trips = dropped.iter().map(ToString::to_string).collect();

    let trips: Vec<CleanTrip> = retained.into_iter().map(|(key, tuples)| CleanTrip { key, tuples }).collect();
    report.trips_retained = trips.len() as u64;
    report.output_total = trips.iter().map(|t| t.tuples.len() as u64).sum();
    debug_assert!(report.is_conserved());
    CleanOutput { trips, report }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T0: i64 = 1_465_992_000;

    fn raw(seq: u64, trip: &str, ts: i64, lat: f64) -> RawTuple {
        let mut t = RawTuple { seq, ..Default::default() };
        for (slot, name) in DESCRIPTOR_NAMES.iter().enumerate() {
            t.values[slot] = Some(match *name {
                "route_id_rta" => "51".to_string(),
                "trip_id_tta" => trip.to_string(),
                "route_name" => "Route 51".to_string(),
                "trip_start" => "12:00".to_string(),
                "trip_finish" => "13:00".to_string(),
                other => format!("{other}-1"),
            });
        }
        t.values[LAT_SLOT] = Some(lat.to_string());
        t.values[LNG_SLOT] = Some("-64.78".to_string());
        t.values[TIMESTAMP_SLOT] = Some(ts.to_string());
        t
    }

    fn ts(list: &[i64]) -> Vec<Timestamp> {
        list.iter().map(|&s| Timestamp(T0 + s)).collect()
    }

    #[test]
    fn missing_detection_examples() {
        assert_eq!(detect_missing(&ts(&[0, 5, 10, 15]), 5).missing, 0);
        assert_eq!(detect_missing(&ts(&[0, 15]), 5).missing, 2);
        assert_eq!(detect_missing(&ts(&[0, 7]), 5).missing, 0);
        assert_eq!(detect_missing(&ts(&[0, 8]), 5).missing, 1);
        let r = detect_missing(&ts(&[0, 505]), 5);
        assert_eq!(r.missing, 100);
        assert_eq!(r.gaps, vec![Gap { after: Timestamp(T0), delta_s: 505, missing: 100 }]);
        assert_eq!(detect_missing(&[], 5).missing, 0);
    }

    #[test]
    fn sparse_threshold_is_inclusive() {
        let d = chrono::NaiveDate::from_ymd_opt(2016, 6, 15).unwrap();
        let k = |t: &str| TripKey::new("51", t, d).unwrap();
        let (kept, dropped) = drop_sparse_trips(vec![(k("a"), (), 99), (k("b"), (), 100), (k("c"), (), 0)], 100);
        assert_eq!(kept.iter().map(|(k, _)| k.trip_id.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(dropped, vec![k("b")]);
    }

    fn clean(t: &RawTuple) -> CleanTuple {
        match repair_attributes(t, &CanonTable::new()) {
            RepairVerdict::Keep(c, _) => c,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dedup_examples() {
        let a = clean(&raw(0, "1", T0, 46.1));
        let (kept, stats) = dedup(vec![a.clone(), CleanTuple { seq: 1, ..a.clone() }]);
        assert_eq!((kept.len(), stats.removed, stats.conflicts), (1, 1, 0));
        assert_eq!(kept[0].seq, 0);

        let b = clean(&raw(1, "1", T0 + 5, 46.1));
        let (kept, stats) = dedup(vec![b.clone(), a.clone()]);
        assert_eq!((kept.len(), stats.removed), (2, 0));

        let triple = vec![CleanTuple { seq: 9, ..a.clone() }, CleanTuple { seq: 4, ..a.clone() }, a.clone()];
        let (kept, stats) = dedup(triple);
        assert_eq!((kept.len(), stats.removed, kept[0].seq), (1, 2, 0));

        let moved = CleanTuple { seq: 5, position: LatLng::new(46.2, -64.78), ..a.clone() };
        let (kept, stats) = dedup(vec![moved, a.clone()]);
        assert_eq!((kept[0].seq, stats.conflicts), (0, 1));
    }

    #[test]
    fn missing_non_essential_becomes_na() {
        let mut t = raw(0, "1", T0, 46.1);
        t.set("bdescription", None);
        match repair_attributes(&t, &CanonTable::new()) {
            RepairVerdict::Keep(c, stats) => {
                assert_eq!(c.descriptors.get("bdescription"), Some(NOT_AVAILABLE));
                assert_eq!(stats.set_na, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn extra_attribute_is_stripped() {
        let mut t = raw(0, "1", T0, 46.1);
        t.set("odometer", Some("1234".into()));
        assert_eq!(t.extra.len(), 1);
        match repair_attributes(&t, &CanonTable::new()) {
            RepairVerdict::Keep(c, stats) => {
                assert_eq!(stats.stripped, 1);
                assert_eq!(c.descriptors.0.len(), 14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn route_name_is_canonicalized() {
        let table = CanonTable::from_json_str(r#"{"route_name":{"route 51":"Route 51"}}"#).unwrap();
        let mut t = raw(0, "1", T0, 46.1);
        t.set("route_name", Some("ROUTE 51 ".into()));
        match repair_attributes(&t, &table) {
            RepairVerdict::Keep(c, stats) => {
                assert_eq!(c.descriptors.get("route_name"), Some("Route 51"));
                assert_eq!(stats.standardized, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn essential_defects_delete() {
        let table = CanonTable::new();
        let mut t = raw(0, "1", T0, 46.1);
        t.set("trip_id_tta", None);
        assert!(matches!(repair_attributes(&t, &table), RepairVerdict::Delete(DeleteReason::MissingEssential(_), _)));
        let mut t = raw(0, "1", T0, 46.1);
        t.set("lat", Some("north".into()));
        assert!(matches!(repair_attributes(&t, &table), RepairVerdict::Delete(..)));
        let mut t = raw(0, "1", T0, 46.1);
        t.set("lat", Some("95".into()));
        assert!(matches!(repair_attributes(&t, &table), RepairVerdict::Delete(DeleteReason::InvalidPosition, _)));
        let mut t = raw(0, "1", T0, 46.1);
        t.set("timestamp", Some("soon".into()));
        assert!(matches!(repair_attributes(&t, &table), RepairVerdict::Delete(DeleteReason::BadTimestamp, _)));
        let mut t = raw(0, "1", T0, 46.1);
        t.set("route_id_rta", Some("N/A".into()));
        assert!(matches!(repair_attributes(&t, &table), RepairVerdict::Delete(..)));
    }

    #[test]
    fn unrepairable_non_essential_becomes_na() {
        let mut t = raw(0, "1", T0, 46.1);
        t.set("trip_start", Some("99:99".into()));
        match repair_attributes(&t, &CanonTable::new()) {
            RepairVerdict::Keep(c, stats) => {
                assert_eq!(c.descriptors.get("trip_start"), Some(NOT_AVAILABLE));
                assert_eq!((stats.set_na, stats.standardized), (1, 0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clean_corpus_is_identity() {
        let input: Vec<RawTuple> = (0..20).map(|i| raw(i, "1", T0 + 5 * i as i64, 46.1)).collect();
        let out = clean_dataset(input, &CanonTable::new(), &CleanConfig::default());
        assert!(out.report.is_identity());
        assert_eq!(out.report.output_total, 20);
        assert_eq!(out.trips.len(), 1);
    }

    #[test]
    fn empty_input_gives_zero_report() {
        let out = clean_dataset(Vec::new(), &CanonTable::new(), &CleanConfig::default());
        assert!(out.trips.is_empty());
        assert_eq!(out.report, CleanReport::default());
    }

    #[test]
    fn sparse_trip_dropped_with_its_tuples() {
        let mut input: Vec<RawTuple> = (0..10).map(|i| raw(i, "a", T0 + 5 * i as i64, 46.1)).collect();
        input.push(raw(10, "a", T0 + 45 + 505, 46.1));
        input.extend((0..5).map(|i| raw(20 + i, "b", T0 + 5 * i as i64, 46.1)));
        let out = clean_dataset(input, &CanonTable::new(), &CleanConfig::default());
        assert_eq!(out.report.trips_dropped_sparse, 1);
        assert_eq!(out.report.tuples_in_dropped_trips, 11);
        assert_eq!(out.report.output_total, 5);
        assert_eq!(out.report.missing_tuples_detected, 100);
        assert!(out.report.is_conserved());
    }

    fn corpus() -> impl Strategy<Value = Vec<RawTuple>> {
        prop::collection::vec((0u8..3, 0i64..40, 0u8..6), 0..60).prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (trip, slot, defect))| {
                    let mut t = raw(i as u64, &format!("t{trip}"), T0 + slot * 5 * (1 + trip as i64 * 20), 46.1);
                    match defect {
                        1 => t.set("bdescription", None),
                        2 => t.set("odometer", Some("1".into())),
                        3 => t.set("vehicle_id_vlr_ta", Some(" Bus  1".into())),
                        4 => t.set("lat", Some("x".into())),
                        _ => {}
                    }
                    t
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn conservation_and_order_insensitivity(input in corpus(), seed in any::<u64>()) {
            let table = CanonTable::new();
            let config = CleanConfig::default();
            let a = clean_dataset(input.clone(), &table, &config);
            prop_assert!(a.report.is_conserved());
            let mut shuffled = input;
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed));
            let b = clean_dataset(shuffled, &table, &config);
            prop_assert_eq!(&a, &b);
            for trip in &a.trips {
                prop_assert!(trip.tuples.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            }
        }
    }
}
