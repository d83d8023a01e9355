use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use transitflow::cleaning::{CanonTable, CleanConfig};
use transitflow::engine::{run_pipeline, RunStatus, CONTEXT_FILE, TIMING_FILE};
use transitflow::geo::{LocalFrame, Xy};
use transitflow::ingestion::synthetic::{generate_synthetic, DefectProfile, Dwell, SyntheticCorpus, TripSchedule};
use transitflow::ingestion::{
    ingest_loop, FileStore, IngestMode, RetryPolicy, ServingRate, StopCondition, StreamSource, TupleStore,
};
use transitflow::io::{read_json_lines, write_ndjson};
use transitflow::reference::{
    write_gtfs, GeometryLayer, GtfsBundle, ReferenceData, Road, Route, RouteLine, Station, StopTime, Trip,
};
use transitflow::{EngineConfig, LatLng, RawTuple, Timestamp};

const ORIGIN: LatLng = LatLng { lat: 46.0878, lng: -64.7782 };
const T0: i64 = 1_465_992_000;

fn at(x: f64, y: f64) -> LatLng {
    LocalFrame::new(ORIGIN).unproject(Xy::new(x, y))
}

fn route() -> RouteLine {
    RouteLine { route_id: "7".into(), points: vec![at(0.0, 0.0), at(1000.0, 0.0)], leg_names: vec!["Main St".into()] }
}

/// A straight 1 km route with stations at 300 m and 700 m and a crossing
/// street at 500 m, written as GTFS and GeoJSON under `dir`.
fn write_reference(dir: &Path, road_order_reversed: bool) {
    let station = |id: &str, x: f64| {
        let p = at(x, 0.0);
        Station { id: id.into(), name: id.into(), lat: p.lat, lng: p.lng }
    };
    let bundle = GtfsBundle {
        stations: vec![station("S1", 300.0), station("S2", 700.0)],
        routes: vec![Route { id: "7".into(), short_name: "7".into(), long_name: "Route 7".into() }],
        trips: vec![Trip {
            id: "A".into(),
            route_id: "7".into(),
            service_id: "WKDY".into(),
            direction_id: None,
            headsign: None,
        }],
        stop_times: ["S1", "S2"]
            .iter()
            .enumerate()
            .map(|(i, s)| StopTime {
                trip_id: "A".into(),
                station_id: s.to_string(),
                arrival_time: String::new(),
                departure_time: String::new(),
                stop_sequence: i as u32 + 1,
            })
            .collect(),
    };
    write_gtfs(&dir.join("gtfs"), &bundle).unwrap();
    let mut roads = vec![
        Road { name: "Main St".into(), points: vec![at(0.0, 0.0), at(500.0, 0.0)] },
        Road { name: "Main St".into(), points: vec![at(500.0, 0.0), at(1000.0, 0.0)] },
        Road { name: "Oak St".into(), points: vec![at(500.0, -300.0), at(500.0, 0.0)] },
    ];
    if road_order_reversed {
        roads.reverse();
    }
    let layer = GeometryLayer { routes: BTreeMap::from([("7".to_string(), route())]), roads };
    fs::write(dir.join("geometry.geojson"), layer.to_geojson().to_string()).unwrap();
}

fn corpus(profile: DefectProfile) -> SyntheticCorpus {
    let schedule = TripSchedule {
        trip_id: "A".into(),
        route_id: "7".into(),
        vehicle_id: "12".into(),
        start: Timestamp(T0),
        speed_mps: 8.0,
        dwells: vec![Dwell { at_m: 300.0, seconds: 20 }, Dwell { at_m: 700.0, seconds: 20 }],
        duration_s: None,
    };
    generate_synthetic(&[route()], &[schedule], &profile).unwrap()
}

fn ingest(dir: &Path, tuples: &[RawTuple]) -> Vec<RawTuple> {
    let feed = dir.join("feed.ndjson");
    write_ndjson(&feed, tuples.iter().map(RawTuple::to_json_object)).unwrap();
    let mut source = StreamSource::replay_file(&feed, ServingRate::MaxSpeed).unwrap();
    let mut store = FileStore::open(dir.join("store")).unwrap();
    let summary =
        ingest_loop(&mut source, &mut store, &StopCondition::EndOfStream, IngestMode::Replay, RetryPolicy::default())
            .unwrap();
    assert_eq!(summary.tuples as usize, tuples.len());
    FileStore::open_existing(dir.join("store")).unwrap().scan().unwrap()
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != TIMING_FILE)
        .map(|p| (p.file_name().unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn stored_feed_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    write_reference(dir.path(), false);
    let profile =
        DefectProfile { seed: 5, duplicates: 6, missing_optional: 2, extra_attributes: 3, ..Default::default() };
    let corpus = corpus(profile);
    let raw = ingest(dir.path(), &corpus.tuples);

    let config = EngineConfig { workers: 2, ..EngineConfig::default() };
    let reference =
        ReferenceData::load(&dir.path().join("gtfs"), &dir.path().join("geometry.geojson"), &config).unwrap();
    let out = dir.path().join("run");
    let summary = run_pipeline(raw.clone(), &reference, &corpus.canon, &config, &out).unwrap();
    let report = &summary.report;
    assert_eq!(report.status, RunStatus::Complete);
    let clean = report.clean.as_ref().unwrap();
    assert_eq!(*clean, corpus.expected_report(&CleanConfig::default()));
    assert_eq!(report.context_tuples, clean.output_total);
    assert!(report.failed_jobs.is_empty() && report.rejects.is_empty());

    let context = read_json_lines(&out.join(CONTEXT_FILE)).unwrap();
    assert!(context.iter().all(|t| t["a20_street"] == "Main St"));
    assert_eq!(context.first().unwrap()["a24_trip_position"], "origin");
    assert_eq!(context.last().unwrap()["a24_trip_position"], "destination");
    let crossing: Vec<&Value> = context.iter().filter(|t| !t["a22_intersection"].is_null()).collect();
    assert!(!crossing.is_empty());
    assert!(crossing.iter().all(|t| t["a22_intersection"] == crossing[0]["a22_intersection"]));

    let visits = read_json_lines(&out.join("station_visits.ndjson")).unwrap();
    let stops: Vec<(Value, Value)> = visits.iter().map(|v| (v["station_id"].clone(), v["direction"].clone())).collect();
    assert_eq!(stops, vec![(json!("S1"), json!("outbound")), (json!("S2"), json!("return"))]);
    assert!(visits.iter().all(|v| (1..=25).contains(&v["dwell_s"].as_i64().unwrap())));

    let again = dir.path().join("run-1");
    let single = EngineConfig { workers: 1, ..config };
    run_pipeline(raw, &reference, &corpus.canon, &single, &again).unwrap();
    assert_eq!(read_dir(&out), read_dir(&again));
}

#[test]
fn unknown_route_fails_only_its_own_partition() {
    let dir = tempfile::tempdir().unwrap();
    write_reference(dir.path(), false);
    let mut tuples = corpus(DefectProfile::default()).tuples;
    let stray: Vec<RawTuple> = tuples[..10]
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.seq += 10_000;
            t.set("route_id_rta", Some("9".into()));
            t.set("route_id_vlr", Some("9".into()));
            t
        })
        .collect();
    tuples.extend(stray);
    let config = EngineConfig::default();
    let reference =
        ReferenceData::load(&dir.path().join("gtfs"), &dir.path().join("geometry.geojson"), &config).unwrap();
    let summary = run_pipeline(tuples, &reference, &CanonTable::new(), &config, &dir.path().join("run")).unwrap();
    assert_eq!(summary.report.partitions, 2);
    assert_eq!(summary.report.failed_jobs.len(), 1);
    assert!(summary.report.failed_jobs[0].key.starts_with("9/"));
    assert_eq!(summary.report.trips.len(), 1);
}

#[test]
fn intersection_ids_ignore_road_order() {
    let ids = |reversed: bool| {
        let dir = tempfile::tempdir().unwrap();
        write_reference(dir.path(), reversed);
        let reference = ReferenceData::load(
            &dir.path().join("gtfs"),
            &dir.path().join("geometry.geojson"),
            &EngineConfig::default(),
        )
        .unwrap();
        reference.intersections().zones().iter().map(|z| z.id.clone()).collect::<Vec<_>>()
    };
    let forward = ids(false);
    assert_eq!(forward.len(), 1);
    assert_eq!(forward, ids(true));
}
