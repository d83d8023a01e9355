//! Hand-designed trips with known labels.
//!
//! Every fixture is laid out on a local plane in meters and placed on the
//! sphere with [`offset`]. The layouts keep each point at least 1 m away from
//! every distance threshold, so the intended labels are unambiguous;
//! [`Fixture::margin_violations`] re-checks that with the spherical oracles.

use std::io;
use std::path::Path;

use transitflow::cleaning::{clean_dataset, CanonTable, CleanConfig};
use transitflow::context::{contextualize_trip, TripContext};
use transitflow::engine::{context_config, map_phase, run_stages, shuffle, StageOutput};
use transitflow::io::{write_json_pretty, write_ndjson};
use transitflow::model::{
    ActivityClass, Direction, LatLng, MotionLabel, RawTuple, StationEvent, StationTag, Timestamp, TripPosition,
    WRONG_STREET_SEGMENT,
};
use transitflow::reference::{
    write_gtfs, GeometryLayer, GtfsBundle, ReferenceData, Road, Route, RouteLine, Station, StopTime, Trip,
};
use transitflow::EngineConfig;

use crate::oracle::{distance_to_arc, haversine, offset};
use crate::truth::{GroundTruth, TruthLabel};

/// Anchor of every fixture layout, downtown Moncton.
pub const ANCHOR: LatLng = LatLng { lat: 46.0878, lng: -64.7782 };
/// 2016-06-15T12:00:00Z.
pub const FIXTURE_T0: i64 = 1_465_992_000;

const ZONE_RADIUS_M: f64 = 30.0;
/// Half the diagonal of a 10 m cell: how far a point can be from its cell center.
const CELL_HALF_DIAGONAL_M: f64 = 7.072;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Role {
    Running,
    Passing(usize),
    Stopover(usize),
    Suspension,
}

impl Role {
    fn activity(self) -> ActivityClass {
        match self {
            Role::Running => ActivityClass::Running,
            Role::Passing(_) => ActivityClass::Passing,
            Role::Stopover(_) => ActivityClass::Stopover,
            Role::Suspension => ActivityClass::SuspensionOfMovement,
        }
    }

    fn station(self) -> Option<usize> {
        match self {
            Role::Passing(s) | Role::Stopover(s) => Some(s),
            _ => None,
        }
    }
}

/// One designed tuple.
#[derive(Debug, Clone)]
struct Step {
    xy: (f64, f64),
    role: Role,
    /// Leg name, or `None` for a point deliberately off the route.
    street: Option<String>,
    light: Option<usize>,
}

/// A designed single-trip scenario with its reference data.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub route_id: String,
    pub trip_id: String,
    pub geometry: GeometryLayer,
    pub gtfs: GtfsBundle,
    /// Feed records in time order.
    pub tuples: Vec<RawTuple>,
    pub truth: GroundTruth,
    positions: Vec<LatLng>,
    roles: Vec<Role>,
    stations: Vec<(String, LatLng)>,
    lights: Vec<LatLng>,
    midpoint: LatLng,
}

/// Layout coordinates (meters east and north of [`ANCHOR`]) on the sphere.
pub fn layout_point(xy: (f64, f64)) -> LatLng {
    offset(ANCHOR, xy.0, xy.1)
}

fn clock(ts: i64) -> String {
    Timestamp(ts).datetime().format("%H:%M:%S").to_string()
}

fn report(route: &str, trip: &str, vehicle: &str, p: LatLng, ts: i64, start: i64, finish: i64) -> RawTuple {
    let mut t = RawTuple::default();
    let fields = [
        ("vlr_id", format!("VLR{vehicle}")),
        ("route_id_vlr", route.to_string()),
        ("route_name", format!("Route {route}")),
        ("route_id_rta", route.to_string()),
        ("route_nickname", format!("R{route}")),
        ("trip_id_br", trip.to_string()),
        ("transit_authority_service_time_id", "WKDY".to_string()),
        ("trip_id_tta", trip.to_string()),
        ("trip_start", clock(start)),
        ("trip_finish", clock(finish)),
        ("vehicle_id_vab", vehicle.to_string()),
        ("vehicle_id_vlr", vehicle.to_string()),
        ("vehicle_id_vlr_ta", format!("Bus {vehicle}")),
        ("bdescription", format!("Transit bus {vehicle}")),
        ("lat", format!("{:.7}", p.lat)),
        ("lng", format!("{:.7}", p.lng)),
        ("timestamp", ts.to_string()),
    ];
    for (name, value) in fields {
        t.set(name, Some(value));
    }
    t
}

/// Parses the feed's 7-decimal coordinates back, so that the truth refers to
/// exactly the positions the pipeline will see.
fn fed_position(t: &RawTuple) -> LatLng {
    let lat = t.get("lat").and_then(|v| v.parse().ok()).expect("fixture latitude");
    let lng = t.get("lng").and_then(|v| v.parse().ok()).expect("fixture longitude");
    LatLng::new(lat, lng)
}

fn intersection_id(p: LatLng) -> String {
    format!("X{:.6}_{:.6}", p.lat, p.lng)
}

/// Three road ends meeting at `center`: a cross street through it and a stub
/// along `along`.
pub(crate) fn crossing_roads(center: (f64, f64), along: (f64, f64), name: &str) -> Vec<Road> {
    let (ux, uy) = along;
    let (nx, ny) = (-uy, ux);
    let p = |k: f64, m: f64| layout_point((center.0 + k * ux + m * nx, center.1 + k * uy + m * ny));
    vec![
        Road { name: format!("{name} Cross"), points: vec![p(0.0, 100.0), p(0.0, 0.0), p(0.0, -100.0)] },
        Road { name: format!("{name} Stub"), points: vec![p(0.0, 0.0), p(100.0, 0.0)] },
    ]
}

struct Layout {
    name: &'static str,
    route_id: &'static str,
    trip_id: &'static str,
    route_xy: Vec<(f64, f64)>,
    leg_names: Vec<&'static str>,
    stations: Vec<(String, (f64, f64))>,
    lights: Vec<((f64, f64), (f64, f64))>,
    /// Intersections formed by `extra_roads`, indexed after the lights.
    nodes: Vec<(f64, f64)>,
    extra_roads: Vec<Road>,
    midpoint_xy: (f64, f64),
    steps: Vec<Step>,
}

impl Layout {
    fn build(self) -> Fixture {
        let route = RouteLine {
            route_id: self.route_id.to_string(),
            points: self.route_xy.iter().map(|xy| layout_point(*xy)).collect(),
            leg_names: self.leg_names.iter().map(|s| s.to_string()).collect(),
        };
        let mut geometry = GeometryLayer::default();
        geometry.routes.insert(route.route_id.clone(), route);
        for (k, (center, along)) in self.lights.iter().enumerate() {
            geometry.roads.extend(crossing_roads(*center, *along, &format!("Light {k}")));
        }
        geometry.roads.extend(self.extra_roads);

        let stations: Vec<(String, LatLng)> =
            self.stations.iter().map(|(id, xy)| (id.clone(), layout_point(*xy))).collect();
        let lights: Vec<LatLng> = self
            .lights
            .iter()
            .map(|(c, _)| layout_point(*c))
            .chain(self.nodes.iter().map(|c| layout_point(*c)))
            .collect();
        let gtfs = GtfsBundle {
            stations: stations
                .iter()
                .map(|(id, p)| Station { id: id.clone(), name: format!("Stop {id}"), lat: p.lat, lng: p.lng })
                .collect(),
            routes: vec![Route {
                id: self.route_id.into(),
                short_name: self.route_id.into(),
                long_name: format!("Route {}", self.route_id),
            }],
            trips: vec![Trip {
                id: self.trip_id.into(),
                route_id: self.route_id.into(),
                service_id: "WKDY".into(),
                direction_id: Some(0),
                headsign: None,
            }],
            stop_times: stations
                .iter()
                .enumerate()
                .map(|(k, (id, _))| StopTime {
                    trip_id: self.trip_id.into(),
                    station_id: id.clone(),
                    arrival_time: String::new(),
                    departure_time: String::new(),
                    stop_sequence: k as u32 + 1,
                })
                .collect(),
        };

        let n = self.steps.len() as i64;
        let finish = FIXTURE_T0 + 5 * (n - 1).max(0);
        let tuples: Vec<RawTuple> = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut t = report(
                    self.route_id,
                    self.trip_id,
                    "12",
                    layout_point(s.xy),
                    FIXTURE_T0 + 5 * i as i64,
                    FIXTURE_T0,
                    finish,
                );
                t.seq = i as u64;
                t
            })
            .collect();
        let positions: Vec<LatLng> = tuples.iter().map(fed_position).collect();
        let midpoint = layout_point(self.midpoint_xy);
        let roles: Vec<Role> = self.steps.iter().map(|s| s.role).collect();
        let labels = label_steps(&self.steps, &positions, &stations, &lights, midpoint);

        Fixture {
            name: self.name,
            route_id: self.route_id.into(),
            trip_id: self.trip_id.into(),
            geometry,
            gtfs,
            tuples,
            truth: GroundTruth { labels, ..GroundTruth::default() },
            positions,
            roles,
            stations,
            lights,
            midpoint,
        }
    }
}

fn label_steps(
    steps: &[Step],
    positions: &[LatLng],
    stations: &[(String, LatLng)],
    lights: &[LatLng],
    midpoint: LatLng,
) -> Vec<TruthLabel> {
    let turn = positions.iter().position(|p| haversine(*p, midpoint) <= ZONE_RADIUS_M);
    let direction = |i: usize| match turn {
        Some(t) if i >= t => Direction::Return,
        _ => Direction::Outbound,
    };
    let n = steps.len();
    let mut labels: Vec<TruthLabel> = steps
        .iter()
        .enumerate()
        .map(|(i, s)| TruthLabel {
            motion: s.role.activity().motion(),
            activity: s.role.activity(),
            street: s.street.clone().unwrap_or_else(|| WRONG_STREET_SEGMENT.to_string()),
            station: s
                .role
                .station()
                .map(|k| StationTag { station_id: stations[k].0.clone(), direction: direction(i) }),
            intersection: s.light.map(|k| intersection_id(lights[k])),
            event: StationEvent::None,
            position: match i {
                0 => TripPosition::Origin,
                _ if i + 1 == n => TripPosition::Destination,
                _ => TripPosition::Index(i as u32),
            },
        })
        .collect();
    // visits: maximal runs of stopovers at one station in one direction
    let mut i = 0;
    while i < n {
        let Role::Stopover(k) = steps[i].role else {
            i += 1;
            continue;
        };
        let mut j = i;
        while j + 1 < n && steps[j + 1].role == Role::Stopover(k) && direction(j + 1) == direction(i) {
            j += 1;
        }
        if i == j {
            labels[i].event = StationEvent::ArrivalAndDeparture;
        } else {
            labels[i].event = StationEvent::Arrival;
            labels[j].event = StationEvent::Departure;
        }
        i = j + 1;
    }
    labels
}

impl Fixture {
    pub fn reference(&self) -> ReferenceData {
        ReferenceData::build(&self.gtfs, &self.geometry, &EngineConfig::default()).expect("fixture reference data")
    }

    /// Cleans the feed and contextualizes the trip, as the reduce phase would.
    pub fn contextualize(&self) -> TripContext {
        let cleaned = clean_dataset(self.tuples.clone(), &CanonTable::new(), &CleanConfig::default());
        let jobs = shuffle(map_phase(cleaned.into_tuples()).0);
        assert_eq!(jobs.len(), 1, "a fixture holds exactly one trip");
        let engine = EngineConfig::default();
        contextualize_trip(&jobs[0].key, &jobs[0].tuples, &self.reference(), &context_config(&engine))
            .expect("fixture contextualizes")
    }

    /// Full clean, map, shuffle and reduce over the feed with `workers` threads.
    pub fn run(&self, workers: usize) -> StageOutput {
        let config = EngineConfig { workers, ..EngineConfig::default() };
        let cleaned = clean_dataset(self.tuples.clone(), &CanonTable::new(), &CleanConfig::default());
        let report = cleaned.report.clone();
        run_stages(cleaned.into_tuples(), &self.reference(), &config, Some(report))
    }

    pub fn positions(&self) -> &[LatLng] {
        &self.positions
    }

    /// Places where a designed point sits within 1 m of a threshold, or where
    /// the intended label disagrees with a spherical brute-force evaluation.
    pub fn margin_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let route = &self.geometry.routes[&self.route_id];
        let legs: Vec<(LatLng, LatLng, &str)> =
            route.points.windows(2).zip(&route.leg_names).map(|(w, n)| (w[0], w[1], n.as_str())).collect();
        for (i, p) in self.positions.iter().enumerate() {
            let label = &self.truth.labels[i];
            if i > 0 {
                let d = haversine(self.positions[i - 1], *p);
                let ok = match label.motion {
                    MotionLabel::Move => d >= 16.0,
                    MotionLabel::Stop => d <= 14.0,
                };
                if !ok {
                    out.push(format!("tuple {i}: step {d:.3} m for {:?}", label.motion));
                }
            }
            for (k, (id, c)) in self.stations.iter().enumerate() {
                let d = haversine(*p, *c);
                let inside = self.roles[i].station() == Some(k);
                if (inside && d > ZONE_RADIUS_M - 1.0) || (!inside && d < ZONE_RADIUS_M + 1.0) {
                    out.push(format!("tuple {i}: {d:.3} m from station {id}"));
                }
            }
            for (k, c) in self.lights.iter().enumerate() {
                let d = haversine(*p, *c);
                let inside = label.intersection.as_deref() == Some(intersection_id(*c).as_str());
                if (inside && d > ZONE_RADIUS_M - 1.0) || (!inside && d < ZONE_RADIUS_M + 1.0) {
                    out.push(format!("tuple {i}: {d:.3} m from light {k}"));
                }
            }
            // only reports up to the first one near the midpoint decide the turn
            let d_mid = haversine(*p, self.midpoint);
            let before_turn = self.positions[..i].iter().all(|q| haversine(*q, self.midpoint) > ZONE_RADIUS_M);
            if before_turn && (d_mid - ZONE_RADIUS_M).abs() < 1.0 {
                out.push(format!("tuple {i}: {d_mid:.3} m from the route midpoint"));
            }
            let mut dists: Vec<(f64, &str)> = legs.iter().map(|(a, b, n)| (distance_to_arc(*p, *a, *b), *n)).collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (nearest, name) = dists[0];
            if label.street == WRONG_STREET_SEGMENT {
                if nearest < ZONE_RADIUS_M + CELL_HALF_DIAGONAL_M + 1.0 {
                    out.push(format!("tuple {i}: off-route point only {nearest:.3} m from the route"));
                }
            } else {
                if nearest > ZONE_RADIUS_M - CELL_HALF_DIAGONAL_M - 1.0 || name != label.street {
                    out.push(format!("tuple {i}: {nearest:.3} m from {name}, labeled {}", label.street));
                }
                if let Some((other, other_name)) = dists.iter().find(|(_, n)| *n != name) {
                    if *other < nearest + 2.0 * CELL_HALF_DIAGONAL_M + 1.0 {
                        out.push(format!("tuple {i}: {other:.3} m from {other_name} is too close to call"));
                    }
                }
            }
        }
        out
    }

    /// Writes `gtfs/`, `geometry.geojson`, `feed.ndjson` and `truth.json`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir.join("gtfs"))?;
        write_gtfs(&dir.join("gtfs"), &self.gtfs).map_err(io::Error::other)?;
        write_json_pretty(&dir.join("geometry.geojson"), &self.geometry.to_geojson())?;
        write_ndjson(&dir.join("feed.ndjson"), self.tuples.iter().map(RawTuple::to_json_object))?;
        write_json_pretty(&dir.join("truth.json"), &self.truth)
    }
}

// ---------------------------------------------------------------------------
// Loop trip: 518 reports on a 3200 m by 1600 m loop.

const LOOP_W: f64 = 3200.0;
const LOOP_H: f64 = 1600.0;
const LOOP_CORNERS: [f64; 4] =
    [LOOP_W / 2.0, LOOP_W / 2.0 + LOOP_H, 1.5 * LOOP_W + LOOP_H, 1.5 * LOOP_W + 2.0 * LOOP_H];
const LOOP_STREETS: [&str; 5] = ["Main St", "East Ave", "King St", "West Ave", "Main St"];

/// Position and street of arc length `s` along the loop, which starts in the
/// middle of its south side and runs counter-clockwise.
fn loop_point(s: f64) -> ((f64, f64), &'static str, (f64, f64)) {
    let [c1, c2, c3, c4] = LOOP_CORNERS;
    if s < c1 {
        ((LOOP_W / 2.0 + s, 0.0), LOOP_STREETS[0], (1.0, 0.0))
    } else if s < c2 {
        ((LOOP_W, s - c1), LOOP_STREETS[1], (0.0, 1.0))
    } else if s < c3 {
        ((LOOP_W - (s - c2), LOOP_H), LOOP_STREETS[2], (-1.0, 0.0))
    } else if s < c4 {
        ((0.0, LOOP_H - (s - c3)), LOOP_STREETS[3], (0.0, -1.0))
    } else {
        ((s - c4, 0.0), LOOP_STREETS[4], (1.0, 0.0))
    }
}

fn near_corner(s: f64, within: f64) -> Option<f64> {
    LOOP_CORNERS.iter().copied().find(|c| (s - c).abs() < within)
}

#[derive(Clone, Copy)]
enum Feature {
    /// Arrive at a station and stand for this many reports.
    Dwell(usize),
    /// Drive through a station zone without stopping.
    PassThrough,
    /// Wait at a traffic light for this many reports.
    Light(usize),
}

/// Running steps between consecutive features (the first entry follows the
/// departure from the origin station).
const LOOP_GAPS: [usize; 28] = [7, 6, 7, 7, 7, 6, 7, 7, 7, 6, 7, 7, 7, 6, 7, 7, 7, 6, 7, 7, 7, 7, 7, 7, 7, 7, 7, 7];
const LOOP_ORIGIN_DWELL: usize = 6;

fn loop_features() -> Vec<Feature> {
    let mut dwells = [5, 9, 6, 8, 7, 7, 4, 10].into_iter();
    let mut waits = [20, 30, 24, 26, 25, 25, 22, 28, 26].into_iter();
    "BLABLBALBBLABLBALBALABLBALBA"
        .chars()
        .map(|c| match c {
            'A' => Feature::Dwell(dwells.next().expect("eight dwells")),
            'B' => Feature::PassThrough,
            _ => Feature::Light(waits.next().expect("nine lights")),
        })
        .collect()
}

/// A single trip of 518 reports whose stop/move and activity labels split as
/// 230 moves and 288 stops, or 200 running, 30 passing, 62 stopover and 226
/// suspension-of-movement reports.
pub fn loop_trip_fixture() -> Fixture {
    let mut steps = Vec::new();
    let mut stations: Vec<(String, (f64, f64))> = Vec::new();
    let mut lights: Vec<((f64, f64), (f64, f64))> = Vec::new();
    let push = |s: f64, role: Role, light: Option<usize>, steps: &mut Vec<Step>| {
        let (xy, street, _) = loop_point(s);
        steps.push(Step { xy, role, street: Some(street.to_string()), light });
    };

    stations.push(("P00".into(), loop_point(10.0).0));
    for _ in 0..LOOP_ORIGIN_DWELL {
        push(0.0, Role::Stopover(0), None, &mut steps);
    }
    let mut cur = 10.0;
    for (gap, feature) in LOOP_GAPS.iter().zip(loop_features()) {
        for _ in 0..*gap {
            let mut next = cur + 40.0;
            if let Some(c) = near_corner(next, 20.0) {
                next = c + 20.0;
            }
            push(next, Role::Running, None, &mut steps);
            cur = next;
        }
        match feature {
            Feature::Dwell(_) | Feature::PassThrough => {
                let mut s = cur + 50.0;
                if let Some(c) = near_corner(s, 60.0) {
                    s = c + 70.0;
                }
                let k = stations.len();
                stations.push((format!("P{k:02}"), loop_point(s).0));
                push(s - 10.0, Role::Passing(k), None, &mut steps);
                if let Feature::Dwell(n) = feature {
                    for _ in 0..n {
                        push(s - 10.0, Role::Stopover(k), None, &mut steps);
                    }
                    cur = s;
                } else {
                    push(s + 10.0, Role::Passing(k), None, &mut steps);
                    cur = s + 10.0;
                }
            }
            Feature::Light(n) => {
                let mut s = cur + 40.0;
                if let Some(c) = near_corner(s, 60.0) {
                    s = c + 60.0;
                }
                let (xy, _, along) = loop_point(s);
                let k = lights.len();
                lights.push((xy, along));
                push(s, Role::Running, Some(k), &mut steps);
                for _ in 0..n {
                    push(s, Role::Suspension, Some(k), &mut steps);
                }
                cur = s;
            }
        }
    }
    assert!(cur < LOOP_CORNERS[3] + LOOP_W / 2.0 - 100.0, "loop trip overruns its loop");

    Layout {
        name: "loop_trip",
        route_id: "51",
        trip_id: "P1",
        route_xy: vec![
            (LOOP_W / 2.0, 0.0),
            (LOOP_W, 0.0),
            (LOOP_W, LOOP_H),
            (0.0, LOOP_H),
            (0.0, 0.0),
            (LOOP_W / 2.0, 0.0),
        ],
        leg_names: LOOP_STREETS.to_vec(),
        stations,
        lights,
        nodes: Vec::new(),
        extra_roads: Vec::new(),
        midpoint_xy: (LOOP_W / 2.0, LOOP_H),
        steps,
    }
    .build()
}

// ---------------------------------------------------------------------------
// Detour: the bus leaves its straight 2 km route for a parallel street 80 m
// north and rejoins 400 m later.

/// A trip that detours off its route between x = 220 m and x = 620 m. The
/// off-route reports are the only ones labeled wrong street segment.
pub fn detour_fixture() -> Fixture {
    let main = Some("Main St".to_string());
    let water = Some("Water St".to_string());
    let mut steps = Vec::new();
    let mut add = |x: f64, y: f64, role: Role, street: &Option<String>, light: Option<usize>| {
        steps.push(Step { xy: (x, y), role, street: street.clone(), light });
    };
    let off: Option<String> = None;

    add(0.0, 0.0, Role::Suspension, &main, None);
    add(40.0, 0.0, Role::Running, &main, None);
    add(90.0, 0.0, Role::Passing(0), &main, None);
    for _ in 0..3 {
        add(90.0, 0.0, Role::Stopover(0), &main, None);
    }
    add(140.0, 0.0, Role::Running, &main, None);
    add(180.0, 0.0, Role::Running, &main, None);
    add(220.0, 20.0, Role::Running, &main, Some(0));
    add(220.0, 60.0, Role::Running, &off, None);
    add(220.0, 80.0, Role::Running, &off, None);
    for k in 0..10 {
        add(260.0 + 40.0 * k as f64, 80.0, Role::Running, &off, None);
    }
    add(620.0, 40.0, Role::Running, &off, None);
    add(620.0, 0.0, Role::Running, &main, Some(1));
    for k in 0..9 {
        add(660.0 + 40.0 * k as f64, 0.0, Role::Running, &main, None);
    }
    for k in 0..12 {
        add(1020.0 + 40.0 * k as f64, 0.0, Role::Running, &water, None);
    }
    add(1490.0, 0.0, Role::Passing(1), &water, None);
    for _ in 0..3 {
        add(1490.0, 0.0, Role::Stopover(1), &water, None);
    }
    for k in 0..12 {
        add(1540.0 + 40.0 * k as f64, 0.0, Role::Running, &water, None);
    }
    add(2000.0, 0.0, Role::Running, &water, None);

    let road = |name: &str, pts: &[(f64, f64)]| Road {
        name: name.into(),
        points: pts.iter().map(|p| layout_point(*p)).collect(),
    };
    Layout {
        name: "detour",
        route_id: "60",
        trip_id: "D1",
        route_xy: vec![(0.0, 0.0), (1000.0, 0.0), (2000.0, 0.0)],
        leg_names: vec!["Main St", "Water St"],
        stations: vec![("D01".into(), (100.0, 0.0)), ("D02".into(), (1500.0, 0.0))],
        lights: Vec::new(),
        nodes: vec![(220.0, 0.0), (620.0, 0.0)],
        extra_roads: vec![
            road("Main St", &[(0.0, 0.0), (220.0, 0.0), (620.0, 0.0), (1000.0, 0.0)]),
            road("Water St", &[(1000.0, 0.0), (2000.0, 0.0)]),
            road("Mill Rd", &[(220.0, 0.0), (220.0, 80.0)]),
            road("Park St", &[(220.0, 80.0), (620.0, 80.0)]),
            road("Ford Rd", &[(620.0, 80.0), (620.0, 0.0)]),
        ],
        midpoint_xy: (1000.0, 0.0),
        steps,
    }
    .build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_trip_counts_by_design() {
        let f = loop_trip_fixture();
        assert_eq!(f.tuples.len(), 518);
        let c = f.truth.counts();
        assert_eq!((c.moves, c.stops), (230, 288));
        assert_eq!((c.running, c.passing, c.stopover, c.suspension_of_movement), (200, 30, 62, 226));
        assert_eq!(f.gtfs.stations.len(), 20);
        assert_eq!(f.lights.len(), 9);
    }

    #[test]
    fn fixtures_respect_margins() {
        for f in [loop_trip_fixture(), detour_fixture()] {
            let v = f.margin_violations();
            assert!(v.is_empty(), "{}: {v:#?}", f.name);
        }
    }

    #[test]
    fn detour_has_off_route_reports() {
        let f = detour_fixture();
        assert_eq!(f.truth.counts().wrong_street_segment, 13);
        assert!(f.truth.labels.iter().any(|l| l.station.as_ref().is_some_and(|s| s.direction == Direction::Return)));
    }
}
