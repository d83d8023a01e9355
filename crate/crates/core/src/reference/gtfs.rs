//! Minimal GTFS reader and writer: stops, routes, trips and stop_times.

use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ReferenceError;
use crate::model::LatLng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    #[serde(rename = "stop_id")]
    pub id: String,
    #[serde(rename = "stop_name", default)]
    pub name: String,
    #[serde(rename = "stop_lat")]
    pub lat: f64,
    #[serde(rename = "stop_lon")]
    pub lng: f64,
}

impl Station {
    pub fn position(&self) -> LatLng {
        LatLng::new(self.lat, self.lng)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    #[serde(rename = "route_id")]
    pub id: String,
    #[serde(rename = "route_short_name", default)]
    pub short_name: String,
    #[serde(rename = "route_long_name", default)]
    pub long_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trip {
    #[serde(rename = "trip_id")]
    pub id: String,
    pub route_id: String,
    #[serde(default)]
    pub service_id: String,
    #[serde(default)]
    pub direction_id: Option<u8>,
    #[serde(rename = "trip_headsign", default)]
    pub headsign: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopTime {
    pub trip_id: String,
    #[serde(rename = "stop_id")]
    pub station_id: String,
    #[serde(default)]
    pub arrival_time: String,
    #[serde(default)]
    pub departure_time: String,
    pub stop_sequence: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtfsBundle {
    pub stations: Vec<Station>,
    pub routes: Vec<Route>,
    pub trips: Vec<Trip>,
    pub stop_times: Vec<StopTime>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GtfsCounts {
    pub stations: usize,
    pub routes: usize,
    pub trips: usize,
    pub stop_times: usize,
}

const STOPS: &str = "stops.txt";
const ROUTES: &str = "routes.txt";
const TRIPS: &str = "trips.txt";
const STOP_TIMES: &str = "stop_times.txt";

fn read_table<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, ReferenceError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(ReferenceError::MissingFile(path));
    }
    let parse_err = |reason: String| ReferenceError::Parse { path: path.clone(), reason };
    let file = File::open(&path).map_err(|e| parse_err(e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    reader.deserialize().map(|row| row.map_err(|e| parse_err(e.to_string()))).collect()
}

fn write_table<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), ReferenceError> {
    let path = dir.join(name);
    let err = |e: csv::Error| ReferenceError::Parse { path: path.clone(), reason: e.to_string() };
    let mut writer = csv::Writer::from_path(&path).map_err(err)?;
    for row in rows {
        writer.serialize(row).map_err(err)?;
    }
    writer.flush().map_err(|e| ReferenceError::Parse { path: path.clone(), reason: e.to_string() })
}

/// Reads the four GTFS tables from `dir` and checks referential integrity.
pub fn load_gtfs(dir: &Path) -> Result<GtfsBundle, ReferenceError> {
    let bundle = GtfsBundle {
        stations: read_table(dir, STOPS)?,
        routes: read_table(dir, ROUTES)?,
        trips: read_table(dir, TRIPS)?,
        stop_times: read_table(dir, STOP_TIMES)?,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn write_gtfs(dir: &Path, bundle: &GtfsBundle) -> Result<(), ReferenceError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| ReferenceError::Parse { path: dir.to_path_buf(), reason: e.to_string() })?;
    write_table(dir, STOPS, &bundle.stations)?;
    write_table(dir, ROUTES, &bundle.routes)?;
    write_table(dir, TRIPS, &bundle.trips)?;
    write_table(dir, STOP_TIMES, &bundle.stop_times)
}

impl GtfsBundle {
    pub fn counts(&self) -> GtfsCounts {
        GtfsCounts {
            stations: self.stations.len(),
            routes: self.routes.len(),
            trips: self.trips.len(),
            stop_times: self.stop_times.len(),
        }
    }

    /// Lists every dangling reference and invalid station position.
    pub fn validate(&self) -> Result<(), ReferenceError> {
        let routes: HashSet<&str> = self.routes.iter().map(|r| r.id.as_str()).collect();
        let stations: HashSet<&str> = self.stations.iter().map(|s| s.id.as_str()).collect();
        let trips: HashSet<&str> = self.trips.iter().map(|t| t.id.as_str()).collect();

        let mut problems = Vec::new();
        let bad_positions: BTreeSet<&str> =
            self.stations.iter().filter(|s| !s.position().is_valid()).map(|s| s.id.as_str()).collect();
        if !bad_positions.is_empty() {
            problems.push(format!("stations with invalid coordinates: {}", join(&bad_positions)));
        }
        let unknown_routes: BTreeSet<&str> =
            self.trips.iter().map(|t| t.route_id.as_str()).filter(|r| !routes.contains(r)).collect();
        if !unknown_routes.is_empty() {
            problems.push(format!("trips reference unknown routes: {}", join(&unknown_routes)));
        }
        let unknown_stations: BTreeSet<&str> =
            self.stop_times.iter().map(|s| s.station_id.as_str()).filter(|s| !stations.contains(s)).collect();
        if !unknown_stations.is_empty() {
            problems.push(format!("stop_times reference unknown stations: {}", join(&unknown_stations)));
        }
        let unknown_trips: BTreeSet<&str> =
            self.stop_times.iter().map(|s| s.trip_id.as_str()).filter(|t| !trips.contains(t)).collect();
        if !unknown_trips.is_empty() {
            problems.push(format!("stop_times reference unknown trips: {}", join(&unknown_trips)));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ReferenceError::Validation(problems.join("; ")))
        }
    }

    /// Stations served by at least one trip of `route_id`, sorted by id.
    pub fn stations_for_route(&self, route_id: &str) -> Vec<&Station> {
        let trips: HashSet<&str> =
            self.trips.iter().filter(|t| t.route_id == route_id).map(|t| t.id.as_str()).collect();
        let served: BTreeSet<&str> = self
            .stop_times
            .iter()
            .filter(|s| trips.contains(s.trip_id.as_str()))
            .map(|s| s.station_id.as_str())
            .collect();
        let mut out: Vec<&Station> = self.stations.iter().filter(|s| served.contains(s.id.as_str())).collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

fn join(ids: &BTreeSet<&str>) -> String {
    ids.iter().copied().collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_minimal(dir: &Path) {
        fs::write(
            dir.join(STOPS),
            "stop_id,stop_name,stop_lat,stop_lon,zone_id\nS1,Main,46.08,-64.78,\nS2,Elm,46.09,-64.77,\n",
        )
        .unwrap();
        fs::write(
            dir.join(ROUTES),
            "route_id,agency_id,route_short_name,route_long_name,route_type\n51,A,51,Main Line,3\n",
        )
        .unwrap();
        fs::write(dir.join(TRIPS), "route_id,service_id,trip_id,direction_id\n51,WK,T1,0\n").unwrap();
        fs::write(
            dir.join(STOP_TIMES),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\nT1,08:00:00,08:00:00,S1,1\nT1,08:10:00,08:10:30,S2,2\n",
        )
        .unwrap();
    }

    #[test]
    fn loads_minimal_bundle() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        let bundle = load_gtfs(dir.path()).unwrap();
        assert_eq!(bundle.counts(), GtfsCounts { stations: 2, routes: 1, trips: 1, stop_times: 2 });
        assert_eq!(bundle.stations_for_route("51").len(), 2);
        assert!(bundle.stations_for_route("52").is_empty());
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        fs::remove_file(dir.path().join(TRIPS)).unwrap();
        match load_gtfs(dir.path()) {
            Err(ReferenceError::MissingFile(p)) => assert!(p.ends_with(TRIPS)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dangling_station_is_listed() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        let mut text = fs::read_to_string(dir.path().join(STOP_TIMES)).unwrap();
        text.push_str("T1,08:20:00,08:20:00,S9,3\n");
        fs::write(dir.path().join(STOP_TIMES), text).unwrap();
        match load_gtfs(dir.path()) {
            Err(ReferenceError::Validation(msg)) => assert!(msg.contains("S9"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        write_minimal(dir.path());
        let bundle = load_gtfs(dir.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        write_gtfs(out.path(), &bundle).unwrap();
        assert_eq!(load_gtfs(out.path()).unwrap(), bundle);
    }
}
