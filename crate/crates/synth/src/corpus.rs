//! Desk-scale corpus whose defect mix follows a year of production feed
//! statistics, together with the reference data needed to contextualize it.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use transitflow::cleaning::{CleanConfig, CleanReport};
use transitflow::error::{ReferenceError, SynthError};
use transitflow::ingestion::synthetic::{
    generate_synthetic, DefectProfile, Dwell, GapInjection, SyntheticCorpus, TripSchedule, CADENCE_S,
};
use transitflow::io::{write_json_pretty, write_ndjson};
use transitflow::model::{RawTuple, Timestamp};
use transitflow::reference::{
    write_gtfs, GeometryLayer, GtfsBundle, ReferenceData, Route, RouteLine, Station, StopTime, Trip,
};
use transitflow::EngineConfig;

use crate::fixtures::{crossing_roads, layout_point, FIXTURE_T0};

/// Tuples in the production year the ratios are taken from.
pub const YEAR_TUPLES: f64 = 65_097_658.0;
pub const YEAR_DUPLICATES: f64 = 38_167_787.0;
/// Tuples removed with trips that had too many missing reports.
pub const YEAR_SPARSE_DELETIONS: f64 = 480_000.0;
/// Tuples whose attributes were repaired.
pub const YEAR_REPAIRS: f64 = 6_000.0;
/// Tuples in the cleaned year.
pub const YEAR_OUTPUT: f64 = 26_443_871.0;

/// Reports a sparse trip keeps on each side of its gap, at most.
const SPARSE_TRIP_REPORTS: usize = 185;
/// Reports removed from each sparse trip; enough to cross the drop threshold.
const SPARSE_GAP: usize = 120;
const ROUTE_IDS: [&str; 8] = ["51", "52", "60", "61", "63", "65", "70", "80"];
const STREETS: [&str; 8] = ["Main", "King", "Mountain", "Vaughan", "St George", "Elmwood", "Mapleton", "Botsford"];
const STATION_SPACING_M: f64 = 300.0;
const DWELL_S: i64 = 15;
const SPEED_MPS: f64 = 8.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("infeasible corpus configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: u64,
    pub total_tuples: usize,
    /// Share of records that are exact copies of an earlier record.
    pub duplicate_ratio: f64,
    /// Share of records in trips with too many missing reports.
    pub sparse_ratio: f64,
    /// Share of records that lose or garble a key, position or timestamp.
    pub deletion_ratio: f64,
    /// Share of records with a repairable attribute defect.
    pub repair_ratio: f64,
    pub routes: usize,
    /// Length of a regular trip.
    pub trip_duration_s: i64,
    pub gps_noise_m: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig::field_ratios(100_000, 2016)
    }
}

impl CorpusConfig {
    /// Defect shares of the production year. The year's output is 6,000
    /// tuples short of input minus duplicates minus sparse-trip deletions;
    /// those are modeled as deletions for unusable essential attributes.
    pub fn field_ratios(total_tuples: usize, seed: u64) -> Self {
        CorpusConfig {
            seed,
            total_tuples,
            duplicate_ratio: YEAR_DUPLICATES / YEAR_TUPLES,
            sparse_ratio: YEAR_SPARSE_DELETIONS / YEAR_TUPLES,
            deletion_ratio: (YEAR_TUPLES - YEAR_DUPLICATES - YEAR_SPARSE_DELETIONS - YEAR_OUTPUT) / YEAR_TUPLES,
            repair_ratio: YEAR_REPAIRS / YEAR_TUPLES,
            routes: 4,
            trip_duration_s: 3600,
            gps_noise_m: 1.5,
        }
    }

    /// No defects at all: cleaning must return the input unchanged.
    pub fn clean(total_tuples: usize, seed: u64) -> Self {
        CorpusConfig {
            duplicate_ratio: 0.0,
            sparse_ratio: 0.0,
            deletion_ratio: 0.0,
            repair_ratio: 0.0,
            ..CorpusConfig::field_ratios(total_tuples, seed)
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CorpusError> {
        toml::from_str(text).map_err(|e| CorpusError::Config(e.to_string()))
    }
}

/// Integer plan derived from the ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusCounts {
    pub duplicates: usize,
    pub sparse_reports: usize,
    pub deletions: usize,
    pub repairs: usize,
    pub regular_reports: usize,
}

impl CorpusCounts {
    pub fn plan(config: &CorpusConfig) -> Result<Self, CorpusError> {
        let err = |m: String| Err(CorpusError::Config(m));
        let ratios = [
            ("duplicate_ratio", config.duplicate_ratio),
            ("sparse_ratio", config.sparse_ratio),
            ("deletion_ratio", config.deletion_ratio),
            ("repair_ratio", config.repair_ratio),
        ];
        for (name, r) in ratios {
            if !(0.0..=1.0).contains(&r) {
                return err(format!("{name} = {r} is outside [0, 1]"));
            }
        }
        if ratios.iter().map(|(_, r)| r).sum::<f64>() > 1.0 {
            return err("ratios add up to more than 1".into());
        }
        if config.routes == 0 || config.routes > ROUTE_IDS.len() {
            return err(format!("routes must be between 1 and {}", ROUTE_IDS.len()));
        }
        if config.trip_duration_s < CADENCE_S {
            return err(format!("trip_duration_s must be at least {CADENCE_S}"));
        }
        let n = config.total_tuples as f64;
        let count = |r: f64| (n * r).round() as usize;
        let duplicates = count(config.duplicate_ratio);
        let sparse_reports = count(config.sparse_ratio);
        let deletions = count(config.deletion_ratio);
        let repairs = count(config.repair_ratio);
        if sparse_reports == 1 {
            return err("a sparse trip needs reports on both sides of its gap".into());
        }
        let base = config.total_tuples - duplicates.min(config.total_tuples);
        let Some(regular_reports) = base.checked_sub(sparse_reports) else {
            return err("duplicates and sparse trips exceed the corpus size".into());
        };
        if deletions + repairs > base {
            return err("more attribute defects than original reports".into());
        }
        if duplicates > 0 && deletions + repairs == base {
            return err("no defect-free report left to duplicate".into());
        }
        Ok(CorpusCounts { duplicates, sparse_reports, deletions, repairs, regular_reports })
    }
}

#[derive(Debug, Clone)]
pub struct AcceptanceCorpus {
    pub config: CorpusConfig,
    pub counts: CorpusCounts,
    pub geometry: GeometryLayer,
    pub gtfs: GtfsBundle,
    pub schedules: Vec<TripSchedule>,
    pub profile: DefectProfile,
    pub corpus: SyntheticCorpus,
    /// Cleaning report implied by the injections alone.
    pub expected: CleanReport,
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    seed: u64,
    config: &'a CorpusConfig,
    counts: &'a CorpusCounts,
    tuples: usize,
    expected_report: &'a CleanReport,
    inventory: &'a transitflow::ingestion::synthetic::DefectInventory,
}

type Meters2 = (f64, f64);

struct RouteLayout {
    line: RouteLine,
    /// Arc position, layout position and street direction of each station.
    stations: Vec<(f64, Meters2, Meters2)>,
    length: f64,
}

fn route_layout(r: usize) -> RouteLayout {
    let (ox, oy) = (400.0 * r as f64, 250.0 * r as f64);
    let (w, h) = (1400.0 + 200.0 * r as f64, 900.0);
    let corners = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h), (0.0, 0.0)];
    let names = (0..4).map(|k| format!("{} St", STREETS[(r + 2 * k) % STREETS.len()])).collect();
    let length = 2.0 * (w + h);
    let mut stations = Vec::new();
    let mut s = STATION_SPACING_M / 2.0;
    while s < length {
        let ((x, y), along) = if s < w {
            ((s, 0.0), (1.0, 0.0))
        } else if s < w + h {
            ((w, s - w), (0.0, 1.0))
        } else if s < 2.0 * w + h {
            ((w - (s - w - h), h), (-1.0, 0.0))
        } else {
            ((0.0, h - (s - 2.0 * w - h)), (0.0, -1.0))
        };
        stations.push((s, (ox + x, oy + y), along));
        s += STATION_SPACING_M;
    }
    RouteLayout {
        line: RouteLine {
            route_id: ROUTE_IDS[r].to_string(),
            points: corners.iter().map(|(x, y)| layout_point((ox + x, oy + y))).collect(),
            leg_names: names,
        },
        stations,
        length,
    }
}

fn schedule(trip_id: String, layout: &RouteLayout, vehicle: usize, start: i64, duration_s: i64) -> TripSchedule {
    let laps = (duration_s as f64 * SPEED_MPS / layout.length).ceil() as usize + 1;
    let dwells = (0..laps)
        .flat_map(|lap| {
            layout
                .stations
                .iter()
                .map(move |(s, _, _)| Dwell { at_m: s + lap as f64 * layout.length, seconds: DWELL_S })
        })
        .collect();
    TripSchedule {
        trip_id,
        route_id: layout.line.route_id.clone(),
        vehicle_id: format!("{}", 100 + vehicle),
        start: Timestamp(start),
        speed_mps: SPEED_MPS,
        dwells,
        duration_s: Some(duration_s),
    }
}

/// Builds the corpus, its reference data and its expected cleaning report.
pub fn build_acceptance_corpus(config: &CorpusConfig) -> Result<AcceptanceCorpus, CorpusError> {
    let counts = CorpusCounts::plan(config)?;
    let layouts: Vec<RouteLayout> = (0..config.routes).map(route_layout).collect();
    let slots_per_trip = (config.trip_duration_s / CADENCE_S) as usize;

    let mut schedules = Vec::new();
    let mut trip_lengths = vec![slots_per_trip; counts.regular_reports / slots_per_trip];
    if counts.regular_reports % slots_per_trip > 0 {
        trip_lengths.push(counts.regular_reports % slots_per_trip);
    }
    for (i, slots) in trip_lengths.iter().enumerate() {
        let layout = &layouts[i % layouts.len()];
        let start = FIXTURE_T0 + 60 * i as i64;
        schedules.push(schedule(format!("T{i:04}"), layout, i, start, *slots as i64 * CADENCE_S));
    }
    let mut gaps = Vec::new();
    let sparse_trips = counts.sparse_reports.div_ceil(SPARSE_TRIP_REPORTS);
    for k in 0..sparse_trips {
        // spread the reports evenly over the sparse trips
        let kept = counts.sparse_reports / sparse_trips + usize::from(k < counts.sparse_reports % sparse_trips);
        let i = trip_lengths.len() + k;
        let trip_id = format!("S{k:03}");
        let layout = &layouts[i % layouts.len()];
        let start = FIXTURE_T0 + 60 * i as i64;
        schedules.push(schedule(trip_id.clone(), layout, i, start, (kept + SPARSE_GAP) as i64 * CADENCE_S));
        gaps.push(GapInjection { trip_id, start_slot: kept / 2, length: SPARSE_GAP });
    }

    // repairs split over the four repairable kinds, deletions over the two
    // deleting kinds
    let split = |n: usize, parts: usize, k: usize| n / parts + usize::from(k < n % parts);
    let profile = DefectProfile {
        seed: config.seed,
        duplicates: counts.duplicates,
        gaps,
        corrupt_standardizable: split(counts.repairs, 4, 0),
        missing_optional: split(counts.repairs, 4, 1),
        extra_attributes: split(counts.repairs, 4, 2),
        corrupt_unrepairable: split(counts.repairs, 4, 3),
        missing_essential: split(counts.deletions, 2, 0),
        corrupt_essential: split(counts.deletions, 2, 1),
        gps_noise_m: config.gps_noise_m,
    };
    let lines: Vec<RouteLine> = layouts.iter().map(|l| l.line.clone()).collect();
    let corpus = generate_synthetic(&lines, &schedules, &profile)?;
    let engine = EngineConfig::default();
    let expected = corpus.expected_report(&CleanConfig {
        cadence_s: engine.cadence_s,
        sparse_trip_threshold: engine.sparse_trip_threshold,
    });

    let mut geometry = GeometryLayer::default();
    let mut gtfs = GtfsBundle::default();
    for layout in &layouts {
        let id = layout.line.route_id.clone();
        geometry.routes.insert(id.clone(), layout.line.clone());
        gtfs.routes.push(Route { id: id.clone(), short_name: id.clone(), long_name: format!("Route {id}") });
        for (k, (_, xy, along)) in layout.stations.iter().enumerate() {
            let p = layout_point(*xy);
            gtfs.stations.push(Station {
                id: format!("R{id}S{k:02}"),
                name: format!("Route {id} stop {k}"),
                lat: p.lat,
                lng: p.lng,
            });
            if k % 2 == 1 {
                geometry.roads.extend(crossing_roads(*xy, *along, &format!("R{id} node {k}")));
            }
        }
    }
    for s in &schedules {
        gtfs.trips.push(Trip {
            id: s.trip_id.clone(),
            route_id: s.route_id.clone(),
            service_id: "WKDY".into(),
            direction_id: Some(0),
            headsign: None,
        });
        let stations = gtfs.stations.iter().filter(|st| st.id.starts_with(&format!("R{}S", s.route_id)));
        let rows: Vec<StopTime> = stations
            .enumerate()
            .map(|(k, st)| StopTime {
                trip_id: s.trip_id.clone(),
                station_id: st.id.clone(),
                arrival_time: String::new(),
                departure_time: String::new(),
                stop_sequence: k as u32 + 1,
            })
            .collect();
        gtfs.stop_times.extend(rows);
    }

    Ok(AcceptanceCorpus { config: config.clone(), counts, geometry, gtfs, schedules, profile, corpus, expected })
}

impl AcceptanceCorpus {
    pub fn reference(&self, config: &EngineConfig) -> Result<ReferenceData, ReferenceError> {
        ReferenceData::build(&self.gtfs, &self.geometry, config)
    }

    pub fn tuples(&self) -> &[RawTuple] {
        &self.corpus.tuples
    }

    /// Writes `feed.ndjson`, `feed.meta.json`, `canon.json`, `gtfs/` and
    /// `geometry.geojson` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir.join("gtfs"))?;
        write_ndjson(&dir.join("feed.ndjson"), self.corpus.tuples.iter().map(RawTuple::to_json_object))?;
        let meta = Metadata {
            seed: self.config.seed,
            config: &self.config,
            counts: &self.counts,
            tuples: self.corpus.tuples.len(),
            expected_report: &self.expected,
            inventory: &self.corpus.inventory,
        };
        write_json_pretty(&dir.join("feed.meta.json"), &meta)?;
        write_json_pretty(&dir.join("canon.json"), &self.corpus.canon)?;
        write_gtfs(&dir.join("gtfs"), &self.gtfs).map_err(io::Error::other)?;
        write_json_pretty(&dir.join("geometry.geojson"), &self.geometry.to_geojson())
    }
}
