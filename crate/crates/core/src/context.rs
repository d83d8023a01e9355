//! The seven enrichment steps applied to one cleaned, timestamp-sorted trip.
//!
//! Steps 1–7 are exposed individually; [`contextualize_trip`] composes them
//! against a route's [`RouteReference`].

use serde::{Deserialize, Serialize};

use crate::error::{ContextError, FrameError};
use crate::geo::{planar_distance, LocalFrame};
use crate::model::{
    ActivityClass, CleanTuple, ContextTuple, Direction, LatLng, MotionLabel, StationEvent, StationTag,
    StreetAnnotation, Timestamp, TripKey, TripPosition,
};
use crate::reference::{ReferenceData, RouteBufferGrid, RouteReference, ZoneIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextConfig {
    pub stop_move_threshold_m: f64,
    /// Radius of the zone around the route midpoint that marks the turn.
    pub midpoint_radius_m: f64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig { stop_move_threshold_m: 15.0, midpoint_radius_m: 30.0 }
    }
}

/// Step 1. The first tuple is a stop; each later tuple is a move when it lies
/// strictly farther than `threshold_m` from its predecessor.
pub fn detect_stop_move(
    points: &[LatLng],
    threshold_m: f64,
    frame: &LocalFrame,
) -> Result<Vec<MotionLabel>, FrameError> {
    let mut labels = Vec::with_capacity(points.len());
    if let Some(first) = points.first() {
        frame.check_range(*first)?;
        labels.push(MotionLabel::Stop);
    }
    for pair in points.windows(2) {
        let d = planar_distance(pair[0], pair[1], frame)?;
        labels.push(if d > threshold_m { MotionLabel::Move } else { MotionLabel::Stop });
    }
    Ok(labels)
}

/// Step 2.
pub fn classify_activity(points: &[LatLng], motion: &[MotionLabel], stations: &ZoneIndex) -> Vec<ActivityClass> {
    points.iter().zip(motion).map(|(p, m)| ActivityClass::classify(*m, stations.nearest(*p).is_some())).collect()
}

/// Step 3.
pub fn annotate_street(points: &[LatLng], grid: &RouteBufferGrid) -> Vec<StreetAnnotation> {
    points.iter().map(|p| grid.lookup(*p)).collect()
}

/// Index of the first tuple within `radius_m` of the midpoint; tuples before
/// it are outbound.
pub fn direction_turn(points: &[LatLng], midpoint: LatLng, radius_m: f64, frame: &LocalFrame) -> Option<usize> {
    points.iter().position(|p| planar_distance(*p, midpoint, frame).is_ok_and(|d| d <= radius_m))
}

/// Step 4. Station and direction for stopover and passing tuples.
pub fn identify_station(
    points: &[LatLng],
    activity: &[ActivityClass],
    stations: &ZoneIndex,
    turn: Option<usize>,
) -> Result<Vec<Option<StationTag>>, ContextError> {
    points
        .iter()
        .zip(activity)
        .enumerate()
        .map(|(i, (p, a))| {
            if !a.at_station() {
                return Ok(None);
            }
            let zone = stations.nearest(*p).ok_or(ContextError::StationInvariant { index: i, class: a.as_str() })?;
            let direction = match turn {
                Some(t) if i >= t => Direction::Return,
                _ => Direction::Outbound,
            };
            Ok(Some(StationTag { station_id: zone.id.clone(), direction }))
        })
        .collect()
}

/// Step 5.
pub fn identify_intersection(points: &[LatLng], intersections: &ZoneIndex) -> Vec<Option<String>> {
    points.iter().map(|p| intersections.nearest(*p).map(|z| z.id.clone())).collect()
}

/// A maximal run of consecutive stopovers at one station in one direction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationVisit {
    pub station_id: String,
    pub direction: Direction,
    pub arrival: Timestamp,
    pub departure: Timestamp,
    /// Indices of the member tuples within the trip.
    pub members: Vec<usize>,
}

/// Step 6.
pub fn compute_arrival_departure(
    timestamps: &[Timestamp],
    activity: &[ActivityClass],
    stations: &[Option<StationTag>],
) -> (Vec<StationVisit>, Vec<StationEvent>) {
    let mut visits: Vec<StationVisit> = Vec::new();
    let mut open = false;
    for i in 0..timestamps.len() {
        let tag = match (&stations[i], activity[i]) {
            (Some(tag), ActivityClass::Stopover) => tag,
            _ => {
                open = false;
                continue;
            }
        };
        match visits.last_mut() {
            Some(v) if open && v.station_id == tag.station_id && v.direction == tag.direction => {
                v.members.push(i);
                v.departure = timestamps[i];
            }
            _ => {
                visits.push(StationVisit {
                    station_id: tag.station_id.clone(),
                    direction: tag.direction,
                    arrival: timestamps[i],
                    departure: timestamps[i],
                    members: vec![i],
                });
                open = true;
            }
        }
    }
    let mut events = vec![StationEvent::None; timestamps.len()];
    for v in &visits {
        let (first, last) = (v.members[0], *v.members.last().expect("visits are non-empty"));
        if first == last {
            events[first] = StationEvent::ArrivalAndDeparture;
        } else {
            events[first] = StationEvent::Arrival;
            events[last] = StationEvent::Departure;
        }
    }
    (visits, events)
}

/// Step 7. A single-tuple trip has an origin and no destination.
pub fn tag_origin_destination(len: usize) -> Vec<TripPosition> {
    (0..len)
        .map(|i| match i {
            0 => TripPosition::Origin,
            _ if i + 1 == len => TripPosition::Destination,
            _ => TripPosition::Index(i as u32),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripContext {
    pub tuples: Vec<ContextTuple>,
    pub visits: Vec<StationVisit>,
}

/// Steps 1–7 over one timestamp-sorted trip. The local frame is centered on
/// the first tuple.
pub fn contextualize_with(
    trip: &[CleanTuple],
    route: &RouteReference,
    intersections: &ZoneIndex,
    config: &ContextConfig,
) -> Result<TripContext, ContextError> {
    let Some(first) = trip.first() else {
        return Ok(TripContext { tuples: Vec::new(), visits: Vec::new() });
    };
    let frame = LocalFrame::new(first.position);
    let points: Vec<LatLng> = trip.iter().map(|t| t.position).collect();
    let timestamps: Vec<Timestamp> = trip.iter().map(|t| t.timestamp).collect();

    let motion = detect_stop_move(&points, config.stop_move_threshold_m, &frame)?;
    let activity = classify_activity(&points, &motion, &route.stations);
    let streets = annotate_street(&points, &route.grid);
    let turn = direction_turn(&points, route.midpoint.position, config.midpoint_radius_m, &frame);
    let stations = identify_station(&points, &activity, &route.stations, turn)?;
    let crossings = identify_intersection(&points, intersections);
    let (visits, events) = compute_arrival_departure(&timestamps, &activity, &stations);
    let positions = tag_origin_destination(trip.len());

    let tuples = trip
        .iter()
        .cloned()
        .zip(motion)
        .zip(activity)
        .zip(streets)
        .zip(stations)
        .zip(crossings)
        .zip(events)
        .zip(positions)
        .map(|(((((((base, motion), activity), street), station), intersection), event), position)| ContextTuple {
            base,
            motion,
            activity,
            street,
            station,
            intersection,
            event,
            position,
        })
        .collect();
    Ok(TripContext { tuples, visits })
}

/// Looks up the trip's route and runs [`contextualize_with`].
pub fn contextualize_trip(
    key: &TripKey,
    trip: &[CleanTuple],
    reference: &ReferenceData,
    config: &ContextConfig,
) -> Result<TripContext, ContextError> {
    let route = reference.route(&key.route_id).ok_or_else(|| ContextError::UnknownRoute(key.route_id.clone()))?;
    contextualize_with(trip, route, reference.intersections(), config)
}
