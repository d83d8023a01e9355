use transitflow::context::{classify_activity, detect_stop_move};
use transitflow::engine::RunStatus;
use transitflow::geo::LocalFrame;
use transitflow::model::{ActivityClass, LatLng, MotionLabel, TripPosition, WRONG_STREET_SEGMENT};
use transitflow_synth::{detour_fixture, loop_trip_fixture};

#[test]
fn loop_trip_steps_one_and_two_recover_the_counts() {
    let f = loop_trip_fixture();
    let reference = f.reference();
    let route = reference.route(&f.route_id).unwrap();
    let points: Vec<LatLng> = f.positions().to_vec();
    let motion = detect_stop_move(&points, 15.0, &LocalFrame::new(points[0])).unwrap();
    let activity = classify_activity(&points, &motion, &route.stations);
    let count_m = |m: MotionLabel| motion.iter().filter(|x| **x == m).count();
    let count_a = |a: ActivityClass| activity.iter().filter(|x| **x == a).count();
    assert_eq!((count_m(MotionLabel::Move), count_m(MotionLabel::Stop)), (230, 288));
    assert_eq!(count_a(ActivityClass::Running), 200);
    assert_eq!(count_a(ActivityClass::Passing), 30);
    assert_eq!(count_a(ActivityClass::Stopover), 62);
    assert_eq!(count_a(ActivityClass::SuspensionOfMovement), 226);
}

#[test]
fn designed_fixtures_match_ground_truth() {
    for f in [loop_trip_fixture(), detour_fixture()] {
        let ctx = f.contextualize();
        let mismatches = f.truth.mismatches(&ctx.tuples);
        assert!(mismatches.is_empty(), "{}: {mismatches:#?}", f.name);
    }
}

#[test]
fn detour_flags_exactly_the_off_route_reports() {
    let f = detour_fixture();
    let ctx = f.contextualize();
    let flagged: Vec<usize> = ctx
        .tuples
        .iter()
        .enumerate()
        .filter(|(_, t)| t.street.as_str() == WRONG_STREET_SEGMENT)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(flagged, (9..=21).collect::<Vec<_>>());
    let origins = ctx.tuples.iter().filter(|t| t.position == TripPosition::Origin).count();
    let ends = ctx.tuples.iter().filter(|t| t.position == TripPosition::Destination).count();
    assert_eq!((origins, ends), (1, 1));
    assert_eq!(ctx.visits.len(), 2);
}

#[test]
fn fixture_runs_are_worker_independent() {
    let f = loop_trip_fixture();
    let one = f.run(1);
    let four = f.run(4);
    assert_eq!(one.report.status, RunStatus::Complete);
    assert_eq!(one.context_ndjson, four.context_ndjson);
    assert_eq!(one.visits_ndjson, four.visits_ndjson);
    assert_eq!(one.report, four.report);
    assert_eq!(one.report.totals.running, 200);
    assert_eq!(one.report.station_visits, 9);
}

#[test]
fn fixture_files_round_trip_through_the_loaders() {
    let f = detour_fixture();
    let dir = tempfile::tempdir().unwrap();
    f.write(dir.path()).unwrap();
    let bundle = transitflow::reference::load_gtfs(&dir.path().join("gtfs")).unwrap();
    assert_eq!(bundle, f.gtfs);
    let geometry = transitflow::reference::GeometryLayer::load(&dir.path().join("geometry.geojson")).unwrap();
    assert_eq!(geometry, f.geometry);
    let feed = transitflow::io::read_raw_ndjson(&dir.path().join("feed.ndjson")).unwrap();
    assert_eq!(feed, f.tuples);
}
