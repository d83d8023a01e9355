//! Seeded synthetic feed: buses driving route polylines at a 5 s cadence, with
//! exactly counted defect injections and an inventory of every injection.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cleaning::{CanonTable, CleanConfig, CleanReport};
use crate::error::SynthError;
use crate::geo::{ArcPath, LocalFrame, Xy};
use crate::model::{
    attribute_slot, LatLng, RawTuple, Timestamp, TripKey, DESCRIPTOR_NAMES, LAT_SLOT, LNG_SLOT, ROUTE_ID_SLOT,
    TIMESTAMP_SLOT, TRIP_ID_SLOT,
};
use crate::reference::RouteLine;

/// Reporting interval of every synthetic bus.
pub const CADENCE_S: i64 = 5;

/// The bus stands still for `seconds` once it has driven `at_m` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dwell {
    pub at_m: f64,
    pub seconds: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSchedule {
    pub trip_id: String,
    pub route_id: String,
    pub vehicle_id: String,
    pub start: Timestamp,
    pub speed_mps: f64,
    #[serde(default)]
    pub dwells: Vec<Dwell>,
    /// Report for this long (cycling the route if needed); otherwise until
    /// the end of the route is reached.
    #[serde(default)]
    pub duration_s: Option<i64>,
}

/// Removes `length` consecutive reports of a trip, starting at cadence slot
/// `start_slot`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapInjection {
    pub trip_id: String,
    pub start_slot: usize,
    pub length: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefectProfile {
    pub seed: u64,
    /// Exact copies of randomly chosen reports.
    pub duplicates: usize,
    pub gaps: Vec<GapInjection>,
    /// A non-essential descriptor removed.
    pub missing_optional: usize,
    /// Route id, trip id, position or timestamp removed.
    pub missing_essential: usize,
    /// One attribute outside the schema added.
    pub extra_attributes: usize,
    /// A descriptor mangled in case or whitespace.
    pub corrupt_standardizable: usize,
    /// A non-essential descriptor given an invalid value.
    pub corrupt_unrepairable: usize,
    /// Position or timestamp given an unparseable value.
    pub corrupt_essential: usize,
    /// Standard deviation of isotropic position noise, meters.
    pub gps_noise_m: f64,
}

impl DefectProfile {
    pub fn attribute_defects(&self) -> usize {
        self.missing_optional
            + self.missing_essential
            + self.extra_attributes
            + self.corrupt_standardizable
            + self.corrupt_unrepairable
            + self.corrupt_essential
    }

    pub fn is_clean(&self) -> bool {
        self.duplicates == 0 && self.gaps.is_empty() && self.attribute_defects() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    MissingOptional,
    MissingEssential,
    ExtraAttribute,
    CorruptStandardizable,
    CorruptUnrepairable,
    CorruptEssential,
}

impl DefectKind {
    pub fn deletes_tuple(self) -> bool {
        matches!(self, DefectKind::MissingEssential | DefectKind::CorruptEssential)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDefect {
    /// Arrival sequence number of the affected tuple.
    pub seq: u64,
    pub kind: DefectKind,
    pub attribute: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateRecord {
    pub original: u64,
    pub copy: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapRecord {
    pub trip_id: String,
    pub first_slot: usize,
    pub length: usize,
}

/// Every injected defect, by arrival sequence number.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectInventory {
    pub seed: u64,
    pub duplicates: Vec<DuplicateRecord>,
    pub gaps: Vec<GapRecord>,
    pub attribute_defects: Vec<AttributeDefect>,
}

impl DefectInventory {
    pub fn is_empty(&self) -> bool {
        self.duplicates.is_empty() && self.gaps.is_empty() && self.attribute_defects.is_empty()
    }

    pub fn count(&self, kind: DefectKind) -> usize {
        self.attribute_defects.iter().filter(|d| d.kind == kind).count()
    }
}

/// One generated report before defects: trip index, cadence slot, time and
/// noise-free position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedReport {
    pub slot: usize,
    pub timestamp: Timestamp,
    pub position: LatLng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// In arrival order; `seq` is the arrival index.
    pub tuples: Vec<RawTuple>,
    pub inventory: DefectInventory,
    pub canon: CanonTable,
    /// Cadence slots of the reports that survive attribute repair, per key.
    surviving_slots: BTreeMap<TripKey, Vec<usize>>,
    duplicates_of_survivors: u64,
}

/// Distance along the route after `t` seconds of a trip.
fn arc_position(t: f64, speed: f64, dwells: &[Dwell], length: f64, cycle: bool) -> f64 {
    let (mut s, mut clock) = (0.0, 0.0);
    for d in dwells {
        let travel = (d.at_m - s).max(0.0) / speed;
        if t < clock + travel {
            return s + speed * (t - clock);
        }
        clock += travel;
        s = d.at_m.max(s);
        if t < clock + d.seconds as f64 {
            return s;
        }
        clock += d.seconds as f64;
    }
    let s = s + speed * (t - clock);
    if cycle {
        s.rem_euclid(length)
    } else {
        s.min(length)
    }
}

fn trip_end_s(speed: f64, dwells: &[Dwell], length: f64) -> f64 {
    let (mut s, mut clock) = (0.0, 0.0);
    for d in dwells.iter().filter(|d| d.at_m <= length) {
        clock += (d.at_m - s).max(0.0) / speed + d.seconds as f64;
        s = d.at_m.max(s);
    }
    clock + (length - s).max(0.0) / speed
}

/// Noise-free reports of one trip.
pub fn plan_trip(route: &RouteLine, schedule: &TripSchedule) -> Result<Vec<PlannedReport>, SynthError> {
    if route.points.len() < 2 || schedule.speed_mps.is_nan() || schedule.speed_mps <= 0.0 {
        return Err(SynthError::DegenerateGeometry);
    }
    let frame = LocalFrame::new(route.points[0]);
    let xy: Vec<Xy> = route.points.iter().map(|p| frame.project_unchecked(*p)).collect();
    let path = ArcPath::new(xy);
    let length = path.length();
    if length.is_nan() || length <= 0.0 {
        return Err(SynthError::DegenerateGeometry);
    }
    let mut dwells = schedule.dwells.clone();
    dwells.sort_by(|a, b| a.at_m.total_cmp(&b.at_m));
    let slots = match schedule.duration_s {
        Some(d) => (d.max(0) + CADENCE_S - 1) / CADENCE_S,
        None => (trip_end_s(schedule.speed_mps, &dwells, length) / CADENCE_S as f64).floor() as i64 + 1,
    };
    let cycle = schedule.duration_s.is_some();
    Ok((0..slots.max(0) as usize)
        .map(|slot| {
            let t = (slot as i64 * CADENCE_S) as f64;
            let s = arc_position(t, schedule.speed_mps, &dwells, length, cycle);
            PlannedReport {
                slot,
                timestamp: Timestamp(schedule.start.0 + slot as i64 * CADENCE_S),
                position: frame.unproject(path.point_at(s).0),
            }
        })
        .collect())
}

fn clock_text(ts: Timestamp) -> String {
    ts.datetime().format("%H:%M:%S").to_string()
}

pub fn route_name(route_id: &str) -> String {
    format!("Route {route_id}")
}

fn descriptor_values(schedule: &TripSchedule, finish: Timestamp) -> [String; 14] {
    let v = &schedule.vehicle_id;
    DESCRIPTOR_NAMES.map(|name| match name {
        "vlr_id" => format!("VLR{v}"),
        "route_id_vlr" | "route_id_rta" => schedule.route_id.clone(),
        "route_name" => route_name(&schedule.route_id),
        "route_nickname" => format!("R{}", schedule.route_id),
        "trip_id_br" | "trip_id_tta" => schedule.trip_id.clone(),
        "transit_authority_service_time_id" => "WKDY".to_string(),
        "trip_start" => clock_text(schedule.start),
        "trip_finish" => clock_text(finish),
        "vehicle_id_vab" | "vehicle_id_vlr" => v.clone(),
        "vehicle_id_vlr_ta" => format!("Bus {v}"),
        _ => format!("Transit bus {v}"),
    })
}

pub fn coordinate_text(value: f64) -> String {
    format!("{value:.7}")
}

const OPTIONAL_SLOTS: [usize; 12] = [0, 1, 2, 4, 5, 6, 8, 9, 10, 11, 12, 13];
const ESSENTIAL_SLOTS: [usize; 5] = [ROUTE_ID_SLOT, TRIP_ID_SLOT, LAT_SLOT, LNG_SLOT, TIMESTAMP_SLOT];

struct Base {
    tuple: RawTuple,
    key: TripKey,
    slot: usize,
    order: (i64, usize),
}

fn apply_defect(tuple: &mut RawTuple, kind: DefectKind, variant: usize, rng: &mut ChaCha8Rng) -> String {
    let name = |slot: usize| crate::model::ATTRIBUTE_NAMES[slot].to_string();
    match kind {
        DefectKind::MissingOptional => {
            let slot = OPTIONAL_SLOTS[rng.random_range(0..OPTIONAL_SLOTS.len())];
            tuple.values[slot] = None;
            name(slot)
        }
        DefectKind::MissingEssential => {
            let slot = ESSENTIAL_SLOTS[variant % ESSENTIAL_SLOTS.len()];
            tuple.values[slot] = None;
            name(slot)
        }
        DefectKind::ExtraAttribute => {
            tuple.set("odometer", Some(rng.random_range(1000..99999).to_string()));
            "odometer".to_string()
        }
        DefectKind::CorruptStandardizable => {
            let attr = if variant.is_multiple_of(2) { "route_name" } else { "vehicle_id_vlr_ta" };
            let slot = attribute_slot(attr).expect("schema attribute");
            let value = tuple.values[slot].clone().unwrap_or_default();
            tuple.values[slot] = Some(if variant.is_multiple_of(2) {
                format!("{} ", value.to_uppercase())
            } else {
                format!(" {}", value.replace(' ', "  "))
            });
            attr.to_string()
        }
        DefectKind::CorruptUnrepairable => {
            let (attr, value) =
                if variant.is_multiple_of(2) { ("trip_start", "99:99") } else { ("vehicle_id_vab", "#?!") };
            tuple.set(attr, Some(value.to_string()));
            attr.to_string()
        }
        DefectKind::CorruptEssential => {
            let (attr, value) = if variant.is_multiple_of(2) { ("lat", "north") } else { ("timestamp", "soon") };
            tuple.set(attr, Some(value.to_string()));
            attr.to_string()
        }
    }
}

/// Generates the feed for `schedules` over `routes` and applies `profile`.
pub fn generate_synthetic(
    routes: &[RouteLine],
    schedules: &[TripSchedule],
    profile: &DefectProfile,
) -> Result<SyntheticCorpus, SynthError> {
    let routes: HashMap<&str, &RouteLine> = routes.iter().map(|r| (r.route_id.as_str(), r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = if profile.gps_noise_m > 0.0 {
        Some(Normal::new(0.0, profile.gps_noise_m).map_err(|e| SynthError::Profile(e.to_string()))?)
    } else {
        None
    };
    let mut gaps: HashMap<&str, Vec<&GapInjection>> = HashMap::new();
    for g in &profile.gaps {
        if !schedules.iter().any(|s| s.trip_id == g.trip_id) {
            return Err(SynthError::Profile(format!("gap refers to unknown trip {}", g.trip_id)));
        }
        gaps.entry(g.trip_id.as_str()).or_default().push(g);
    }

    let mut canon = CanonTable::new();
    let mut base: Vec<Base> = Vec::new();
    let mut gap_records = Vec::new();
    for (trip_index, schedule) in schedules.iter().enumerate() {
        let route = routes
            .get(schedule.route_id.as_str())
            .ok_or_else(|| SynthError::Profile(format!("schedule refers to unknown route {}", schedule.route_id)))?;
        let name = route_name(&schedule.route_id);
        canon.insert("route_name", &name, &name);
        let planned = plan_trip(route, schedule)?;
        let finish = planned.last().map_or(schedule.start, |p| p.timestamp);
        let descriptors = descriptor_values(schedule, finish);
        let frame = LocalFrame::new(route.points[0]);
        let trip_gaps = gaps.get(schedule.trip_id.as_str()).cloned().unwrap_or_default();
        for g in &trip_gaps {
            if g.start_slot + g.length > planned.len() {
                return Err(SynthError::Profile(format!(
                    "gap at slot {} of length {} exceeds trip {} ({} reports)",
                    g.start_slot,
                    g.length,
                    g.trip_id,
                    planned.len()
                )));
            }
            gap_records.push(GapRecord { trip_id: g.trip_id.clone(), first_slot: g.start_slot, length: g.length });
        }
        for report in planned {
            if trip_gaps.iter().any(|g| (g.start_slot..g.start_slot + g.length).contains(&report.slot)) {
                continue;
            }
            let position = match &noise {
                Some(n) => {
                    let xy = frame.project_unchecked(report.position);
                    frame.unproject(Xy::new(xy.x + n.sample(&mut rng), xy.y + n.sample(&mut rng)))
                }
                None => report.position,
            };
            let mut tuple = RawTuple::default();
            for (slot, value) in descriptors.iter().enumerate() {
                tuple.values[slot] = Some(value.clone());
            }
            tuple.values[LAT_SLOT] = Some(coordinate_text(position.lat));
            tuple.values[LNG_SLOT] = Some(coordinate_text(position.lng));
            tuple.values[TIMESTAMP_SLOT] = Some(report.timestamp.0.to_string());
            let key = TripKey::new(&schedule.route_id, &schedule.trip_id, report.timestamp.date())
                .map_err(|e| SynthError::Profile(e.to_string()))?;
            base.push(Base { tuple, key, slot: report.slot, order: (report.timestamp.0, trip_index) });
        }
    }
    base.sort_by_key(|b| b.order);

    let n_defects = profile.attribute_defects();
    if n_defects > base.len() {
        return Err(SynthError::Profile(format!("{n_defects} attribute defects but only {} reports", base.len())));
    }
    if profile.duplicates > 0 && n_defects == base.len() {
        return Err(SynthError::Profile("no defect-free report left to duplicate".into()));
    }
    let targets = sample(&mut rng, base.len(), n_defects).into_vec();
    let kinds = [
        (DefectKind::MissingOptional, profile.missing_optional),
        (DefectKind::MissingEssential, profile.missing_essential),
        (DefectKind::ExtraAttribute, profile.extra_attributes),
        (DefectKind::CorruptStandardizable, profile.corrupt_standardizable),
        (DefectKind::CorruptUnrepairable, profile.corrupt_unrepairable),
        (DefectKind::CorruptEssential, profile.corrupt_essential),
    ];
    let mut defects: Vec<(usize, DefectKind, String)> = Vec::with_capacity(n_defects);
    let mut target_iter = targets.iter().copied();
    let mut deleted: BTreeSet<usize> = BTreeSet::new();
    for (kind, count) in kinds {
        for variant in 0..count {
            let index = target_iter.next().expect("sampled enough targets");
            let attribute = apply_defect(&mut base[index].tuple, kind, variant, &mut rng);
            if kind.deletes_tuple() {
                deleted.insert(index);
            }
            defects.push((index, kind, attribute));
        }
    }
    let targeted: BTreeSet<usize> = targets.into_iter().collect();
    let clean_indices: Vec<usize> = (0..base.len()).filter(|i| !targeted.contains(i)).collect();

    // arrival order: base reports by time, each copy a few places after its original
    let mut arrivals: Vec<(f64, usize, Option<usize>)> = (0..base.len()).map(|i| (i as f64, i, None)).collect();
    for c in 0..profile.duplicates {
        let original = clean_indices[rng.random_range(0..clean_indices.len())];
        let offset: f64 = rng.random_range(0.01..8.0);
        arrivals.push((original as f64 + offset, original, Some(c)));
    }
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

    let mut seq_of_base = vec![0u64; base.len()];
    for (seq, (_, index, copy)) in arrivals.iter().enumerate() {
        if copy.is_none() {
            seq_of_base[*index] = seq as u64;
        }
    }
    let mut tuples = Vec::with_capacity(arrivals.len());
    let mut duplicates = Vec::with_capacity(profile.duplicates);
    for (seq, (_, index, copy)) in arrivals.iter().enumerate() {
        let mut tuple = base[*index].tuple.clone();
        tuple.seq = seq as u64;
        if copy.is_some() {
            duplicates.push(DuplicateRecord { original: seq_of_base[*index], copy: seq as u64 });
        }
        tuples.push(tuple);
    }

    let mut surviving_slots: BTreeMap<TripKey, Vec<usize>> = BTreeMap::new();
    for (i, b) in base.iter().enumerate() {
        if !deleted.contains(&i) {
            surviving_slots.entry(b.key.clone()).or_default().push(b.slot);
        }
    }
    for slots in surviving_slots.values_mut() {
        slots.sort_unstable();
    }
    let mut attribute_defects: Vec<AttributeDefect> = defects
        .into_iter()
        .map(|(index, kind, attribute)| AttributeDefect { seq: seq_of_base[index], kind, attribute })
        .collect();
    attribute_defects.sort_by_key(|d| d.seq);
    duplicates.sort_by_key(|d| d.copy);

    Ok(SyntheticCorpus {
        tuples,
        inventory: DefectInventory { seed: profile.seed, duplicates, gaps: gap_records, attribute_defects },
        canon,
        duplicates_of_survivors: profile.duplicates as u64,
        surviving_slots,
    })
}

impl SyntheticCorpus {
    /// The cleaning report this corpus must produce, derived from the
    /// injection bookkeeping alone.
    pub fn expected_report(&self, config: &CleanConfig) -> CleanReport {
        let inv = &self.inventory;
        let count = |k| inv.count(k) as u64;
        let mut report = CleanReport {
            input_total: self.tuples.len() as u64,
            duplicates_removed: self.duplicates_of_survivors,
            attributes_set_na: count(DefectKind::MissingOptional) + count(DefectKind::CorruptUnrepairable),
            tuples_deleted: count(DefectKind::MissingEssential) + count(DefectKind::CorruptEssential),
            redundant_attributes_stripped: count(DefectKind::ExtraAttribute),
            values_standardized: count(DefectKind::CorruptStandardizable),
            ..CleanReport::default()
        };
        for (key, slots) in &self.surviving_slots {
            let mut missing = 0u64;
            for w in slots.windows(2) {
                let gap_s = (w[1] - w[0]) as i64 * CADENCE_S;
                // a gap of g seconds hides g/cadence - 1 reports, rounded
                if gap_s * 2 > config.cadence_s * 3 {
                    missing += ((2 * gap_s + config.cadence_s) / (2 * config.cadence_s) - 1) as u64;
                }
            }
            report.missing_tuples_detected += missing;
            if missing >= config.sparse_trip_threshold {
                report.trips_dropped_sparse += 1;
                report.tuples_in_dropped_trips += slots.len() as u64;
                report.dropped_trips.push(key.to_string());
            } else {
                report.trips_retained += 1;
                report.output_total += slots.len() as u64;
            }
        }
        report
    }

    /// Reports per key that survive repair, before sparse-trip removal.
    pub fn surviving_reports(&self) -> usize {
        self.surviving_slots.values().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGIN: LatLng = LatLng { lat: 46.0878, lng: -64.7782 };

    fn line(length_m: f64) -> RouteLine {
        let frame = LocalFrame::new(ORIGIN);
        RouteLine {
            route_id: "51".into(),
            points: vec![ORIGIN, frame.unproject(Xy::new(0.0, length_m))],
            leg_names: vec!["Main St".into()],
        }
    }

    fn schedule(trip: &str, start: i64, duration: Option<i64>) -> TripSchedule {
        TripSchedule {
            trip_id: trip.into(),
            route_id: "51".into(),
            vehicle_id: "12".into(),
            start: Timestamp(start),
            speed_mps: 8.0,
            dwells: vec![],
            duration_s: duration,
        }
    }

    const T0: i64 = 1_465_992_000;

    #[test]
    fn one_hour_trip_has_720_reports() {
        let planned = plan_trip(&line(5000.0), &schedule("T1", T0, Some(3600))).unwrap();
        assert_eq!(planned.len(), 720);
        assert_eq!(planned[719].timestamp.0 - planned[0].timestamp.0, 3595);
    }

    #[test]
    fn dwell_holds_position() {
        let mut s = schedule("T1", T0, None);
        s.dwells = vec![Dwell { at_m: 40.0, seconds: 20 }];
        let planned = plan_trip(&line(80.0), &s).unwrap();
        // 5 s to reach 40 m, 20 s standing, 5 s to the end
        assert_eq!(planned.len(), 7);
        let frame = LocalFrame::new(ORIGIN);
        let ys: Vec<f64> = planned.iter().map(|p| frame.project(p.position).unwrap().y.round()).collect();
        assert_eq!(ys, vec![0.0, 40.0, 40.0, 40.0, 40.0, 40.0, 80.0]);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let mut l = line(100.0);
        l.points.truncate(1);
        assert!(matches!(plan_trip(&l, &schedule("T1", T0, None)), Err(SynthError::DegenerateGeometry)));
        let l = RouteLine { points: vec![ORIGIN, ORIGIN], ..line(1.0) };
        assert!(matches!(plan_trip(&l, &schedule("T1", T0, None)), Err(SynthError::DegenerateGeometry)));
    }

    #[test]
    fn clean_profile_has_empty_inventory() {
        let corpus =
            generate_synthetic(&[line(5000.0)], &[schedule("T1", T0, Some(600))], &DefectProfile::default()).unwrap();
        assert_eq!(corpus.tuples.len(), 120);
        assert!(corpus.inventory.is_empty());
        assert!(corpus.tuples.windows(2).all(|w| w[0].timestamp() < w[1].timestamp()));
        let report = corpus.expected_report(&CleanConfig::default());
        assert_eq!((report.input_total, report.output_total), (120, 120));
    }

    #[test]
    fn duplicate_inventory_matches_output() {
        let profile = DefectProfile { seed: 3, duplicates: 10, ..Default::default() };
        let schedules: Vec<TripSchedule> = (0..4).map(|i| schedule(&format!("T{i}"), T0 + 7 * i, Some(1250))).collect();
        let corpus = generate_synthetic(&[line(5000.0)], &schedules, &profile).unwrap();
        assert_eq!(corpus.tuples.len(), 1010);
        assert_eq!(corpus.inventory.duplicates.len(), 10);
        for d in &corpus.inventory.duplicates {
            let (a, b) = (&corpus.tuples[d.original as usize], &corpus.tuples[d.copy as usize]);
            assert_eq!(a.values, b.values);
            assert!(d.original < d.copy);
        }
    }

    #[test]
    fn hundred_slot_gap_makes_trip_sparse() {
        let profile = DefectProfile {
            gaps: vec![GapInjection { trip_id: "T1".into(), start_slot: 50, length: 100 }],
            ..Default::default()
        };
        let corpus = generate_synthetic(&[line(5000.0)], &[schedule("T1", T0, Some(1000))], &profile).unwrap();
        let report = corpus.expected_report(&CleanConfig::default());
        assert_eq!(report.missing_tuples_detected, 100);
        assert_eq!(report.trips_dropped_sparse, 1);
        assert_eq!(report.output_total, 0);
    }

    #[test]
    fn same_seed_same_corpus() {
        let profile = DefectProfile {
            seed: 9,
            duplicates: 30,
            missing_optional: 3,
            extra_attributes: 2,
            corrupt_standardizable: 2,
            gps_noise_m: 3.0,
            ..Default::default()
        };
        let s = [schedule("T1", T0, Some(900))];
        let a = generate_synthetic(&[line(5000.0)], &s, &profile).unwrap();
        let b = generate_synthetic(&[line(5000.0)], &s, &profile).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(&[line(5000.0)], &s, &DefectProfile { seed: 10, ..profile }).unwrap();
        assert_ne!(a.tuples, c.tuples);
    }

    #[test]
    fn infeasible_profiles_are_rejected() {
        let s = [schedule("T1", T0, Some(50))];
        let too_many = DefectProfile { missing_optional: 11, ..Default::default() };
        assert!(generate_synthetic(&[line(5000.0)], &s, &too_many).is_err());
        let bad_gap = DefectProfile {
            gaps: vec![GapInjection { trip_id: "T1".into(), start_slot: 5, length: 6 }],
            ..Default::default()
        };
        assert!(generate_synthetic(&[line(5000.0)], &s, &bad_gap).is_err());
    }
}
