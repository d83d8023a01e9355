//! Reference artifacts for contextualization: GTFS stations, station and
//! intersection zones, route buffer grids and route midpoints.

pub mod geometry;
pub mod grid;
pub mod gtfs;
pub mod zones;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

pub use geometry::{GeometryLayer, Road, RouteLine};
pub use grid::{CellIndex, RouteBufferGrid};
pub use gtfs::{load_gtfs, write_gtfs, GtfsBundle, GtfsCounts, Route, Station, StopTime, Trip};
pub use zones::{build_station_zones, route_station_zones, CircularZone, ZoneIndex, ZoneKind};

use crate::config::EngineConfig;
use crate::error::ReferenceError;
use crate::geo::{ArcPath, LocalFrame, Xy};
use crate::model::LatLng;

/// Point at half the arc length of a route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMidpoint {
    pub position: LatLng,
    /// Leg the midpoint lies on.
    pub leg: usize,
    pub route_length_m: f64,
}

pub fn route_midpoint(points: &[LatLng]) -> Result<RouteMidpoint, ReferenceError> {
    let Some(&first) = points.first() else {
        return Err(ReferenceError::DegeneratePolyline("empty polyline".into()));
    };
    let frame = LocalFrame::new(first);
    let xy: Vec<Xy> = points.iter().map(|p| frame.project(*p)).collect::<Result<_, _>>()?;
    let path = ArcPath::new(xy);
    let length = path.length();
    if length.is_nan() || length <= 0.0 {
        return Err(ReferenceError::DegeneratePolyline("polyline has zero length".into()));
    }
    let (mid, leg) = path.point_at(length / 2.0);
    Ok(RouteMidpoint { position: frame.unproject(mid), leg, route_length_m: length })
}

/// One zone per node where at least three legs of the road network end.
///
/// Leg endpoints closer than `snap_m` are merged greedily in coordinate order;
/// the node position is the mean of its members. Zone ids encode the node
/// coordinates and the output is sorted by them, so neither depends on the
/// order of `roads`.
pub fn derive_intersections(roads: &[Road], snap_m: f64, radius_m: f64) -> Vec<CircularZone> {
    let mut endpoints: Vec<LatLng> =
        roads.iter().flat_map(|r| r.points.windows(2).flat_map(|w| [w[0], w[1]])).collect();
    if endpoints.is_empty() {
        return Vec::new();
    }
    endpoints.sort_by(|a, b| a.lat.total_cmp(&b.lat).then(a.lng.total_cmp(&b.lng)));
    let frame = LocalFrame::new(endpoints[0]);
    let cell = snap_m.max(1e-6);

    // cluster seed positions, bucketed by snap cell
    let mut seeds: Vec<Xy> = Vec::new();
    let mut members: Vec<Vec<LatLng>> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for p in endpoints {
        let xy = frame.project_unchecked(p);
        let (bi, bj) = ((xy.x / cell).floor() as i64, (xy.y / cell).floor() as i64);
        let found = (-1..=1)
            .flat_map(|di| (-1..=1).map(move |dj| (bi + di, bj + dj)))
            .flat_map(|b| buckets.get(&b).into_iter().flatten().copied())
            .filter(|&c| seeds[c].dist(xy) <= snap_m)
            .min();
        match found {
            Some(c) => members[c].push(p),
            None => {
                buckets.entry((bi, bj)).or_default().push(seeds.len());
                seeds.push(xy);
                members.push(vec![p]);
            }
        }
    }

    let mut nodes: Vec<LatLng> = members
        .into_iter()
        .filter(|m| m.len() >= 3)
        .map(|m| {
            let n = m.len() as f64;
            LatLng::new(m.iter().map(|p| p.lat).sum::<f64>() / n, m.iter().map(|p| p.lng).sum::<f64>() / n)
        })
        .collect();
    nodes.sort_by(|a, b| a.lat.total_cmp(&b.lat).then(a.lng.total_cmp(&b.lng)));
    nodes
        .into_iter()
        .map(|center| CircularZone {
            id: format!("X{:.6}_{:.6}", center.lat, center.lng),
            kind: ZoneKind::Intersection,
            center,
            radius_m,
        })
        .collect()
}

/// Everything contextualization needs for one route.
#[derive(Debug, Clone)]
pub struct RouteReference {
    pub route_id: String,
    pub grid: RouteBufferGrid,
    pub stations: ZoneIndex,
    pub midpoint: RouteMidpoint,
}

/// Immutable reference data for all routes, shared by every reduce worker.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub routes: BTreeMap<String, Arc<RouteReference>>,
    pub intersections: Arc<ZoneIndex>,
    pub station_radius_m: f64,
}

impl ReferenceData {
    /// Builds per-route artifacts for every route in `geometry`. Station zones
    /// of a route are the GTFS stations its trips serve.
    pub fn build(bundle: &GtfsBundle, geometry: &GeometryLayer, config: &EngineConfig) -> Result<Self, ReferenceError> {
        let mut routes = BTreeMap::new();
        for (route_id, line) in &geometry.routes {
            let grid = RouteBufferGrid::build(line, config.cell_size_m, config.buffer_half_width_m)?;
            let stations = ZoneIndex::new(route_station_zones(bundle, route_id, config.station_radius_m));
            let midpoint = route_midpoint(&line.points)?;
            routes.insert(
                route_id.clone(),
                Arc::new(RouteReference { route_id: route_id.clone(), grid, stations, midpoint }),
            );
        }
        let intersections =
            derive_intersections(&geometry.roads, config.snap_tolerance_m, config.intersection_radius_m);
        Ok(ReferenceData {
            routes,
            intersections: Arc::new(ZoneIndex::new(intersections)),
            station_radius_m: config.station_radius_m,
        })
    }

    pub fn load(gtfs_dir: &Path, geometry_path: &Path, config: &EngineConfig) -> Result<Self, ReferenceError> {
        let bundle = load_gtfs(gtfs_dir)?;
        let geometry = GeometryLayer::load(geometry_path)?;
        Self::build(&bundle, &geometry, config)
    }

    pub fn route(&self, route_id: &str) -> Option<&RouteReference> {
        self.routes.get(route_id).map(Arc::as_ref)
    }

    pub fn intersections(&self) -> &ZoneIndex {
        &self.intersections
    }
}
