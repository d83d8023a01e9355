//! Domain types shared by every stage: the 17-attribute tuple schema, trip keys,
//! and the mobility-context attributes appended during contextualization.

use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::ModelError;

/// The 14 descriptor attributes carried by every GPS report, in schema order.
pub const DESCRIPTOR_NAMES: [&str; 14] = [
    "vlr_id",
    "route_id_vlr",
    "route_name",
    "route_id_rta",
    "route_nickname",
    "trip_id_br",
    "transit_authority_service_time_id",
    "trip_id_tta",
    "trip_start",
    "trip_finish",
    "vehicle_id_vab",
    "vehicle_id_vlr",
    "vehicle_id_vlr_ta",
    "bdescription",
];

/// All 17 wire attributes: the descriptors followed by position and time.
pub const ATTRIBUTE_NAMES: [&str; 17] = [
    "vlr_id",
    "route_id_vlr",
    "route_name",
    "route_id_rta",
    "route_nickname",
    "trip_id_br",
    "transit_authority_service_time_id",
    "trip_id_tta",
    "trip_start",
    "trip_finish",
    "vehicle_id_vab",
    "vehicle_id_vlr",
    "vehicle_id_vlr_ta",
    "bdescription",
    "lat",
    "lng",
    "timestamp",
];

pub const LAT_SLOT: usize = 14;
pub const LNG_SLOT: usize = 15;
pub const TIMESTAMP_SLOT: usize = 16;

/// Descriptor slot holding the route id used for keying and reference lookup.
pub const ROUTE_ID_SLOT: usize = 3;
/// Descriptor slot holding the trip id used for keying.
pub const TRIP_ID_SLOT: usize = 7;

/// Value written into a non-essential attribute that was missing or unrepairable.
pub const NOT_AVAILABLE: &str = "N/A";

/// Street annotation for tuples outside every tagged buffer cell.
pub const WRONG_STREET_SEGMENT: &str = "wrong street segment";

pub fn attribute_slot(name: &str) -> Option<usize> {
    ATTRIBUTE_NAMES.iter().position(|n| *n == name)
}

/// Slots whose absence makes a tuple unusable (keying and geometry).
pub fn is_essential_slot(slot: usize) -> bool {
    matches!(slot, ROUTE_ID_SLOT | TRIP_ID_SLOT | LAT_SLOT | LNG_SLOT | TIMESTAMP_SLOT)
}

/// UTC instant with one-second resolution, stored as epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    /// Accepts epoch seconds (integer, or a float with the fraction truncated) and
    /// ISO-8601 / RFC 3339 text. Text without an offset is read as UTC.
    pub fn parse(raw: &str) -> Result<Self, ModelError> {
        let s = raw.trim();
        if s.is_empty() {
            return Err(ModelError::Timestamp(raw.to_string()));
        }
        if let Ok(secs) = s.parse::<i64>() {
            return Ok(Timestamp(secs));
        }
        if let Ok(secs) = s.parse::<f64>() {
            if secs.is_finite() && secs.abs() < 1e15 {
                return Ok(Timestamp(secs.floor() as i64));
            }
        }
        if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
            return Ok(Timestamp(dt.timestamp()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(Timestamp(naive.and_utc().timestamp()));
            }
        }
        Err(ModelError::Timestamp(raw.to_string()))
    }

    pub fn secs(self) -> i64 {
        self.0
    }

    pub fn date(self) -> NaiveDate {
        self.datetime().date_naive()
    }

    pub fn datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).unwrap_or_default()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.datetime().format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

/// WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLng {
    pub lat: f64,
    pub lng: f64,
}

impl LatLng {
    pub fn new(lat: f64, lng: f64) -> Self {
        LatLng { lat, lng }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lng.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lng)
    }
}

/// Partition key: route, trip and the UTC calendar date of the tuple.
///
/// Ordering is lexicographic over (route_id, trip_id, service_date).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripKey {
    pub route_id: String,
    pub trip_id: String,
    pub service_date: NaiveDate,
}

impl TripKey {
    pub fn new(
        route_id: impl Into<String>,
        trip_id: impl Into<String>,
        service_date: NaiveDate,
    ) -> Result<Self, ModelError> {
        let route_id = route_id.into();
        let trip_id = trip_id.into();
        if route_id.trim().is_empty() {
            return Err(ModelError::EmptyKeyField("route_id"));
        }
        if trip_id.trim().is_empty() {
            return Err(ModelError::EmptyKeyField("trip_id"));
        }
        Ok(TripKey { route_id, trip_id, service_date })
    }
}

impl fmt::Display for TripKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.route_id, self.trip_id, self.service_date.format("%Y:%m:%d"))
    }
}

/// A GPS report as ingested. Attributes are kept as raw text so that cleaning
/// can see exactly what arrived: absent values, malformed numbers, attributes
/// outside the schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTuple {
    /// Ingest sequence number, assigned in arrival order.
    pub seq: u64,
    /// Appended after its event window had already closed.
    pub late: bool,
    /// Values indexed by [`ATTRIBUTE_NAMES`] slot; `None` means absent.
    pub values: [Option<String>; 17],
    /// Attributes outside the schema, sorted by name.
    pub extra: Vec<(String, String)>,
}

impl RawTuple {
    pub fn get(&self, name: &str) -> Option<&str> {
        match attribute_slot(name) {
            Some(slot) => self.values[slot].as_deref(),
            None => self.extra.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str()),
        }
    }

    pub fn set(&mut self, name: &str, value: Option<String>) {
        match attribute_slot(name) {
            Some(slot) => self.values[slot] = value,
            None => {
                self.extra.retain(|(k, _)| k != name);
                if let Some(v) = value {
                    self.extra.push((name.to_string(), v));
                    self.extra.sort();
                }
            }
        }
    }

    pub fn timestamp(&self) -> Option<Timestamp> {
        self.values[TIMESTAMP_SLOT].as_deref().and_then(|s| Timestamp::parse(s).ok())
    }

    /// Builds a tuple from one wire object. Scalars are kept as their textual
    /// form; `null` counts as absent.
    pub fn from_json_object(seq: u64, object: &serde_json::Map<String, Value>) -> Self {
        let mut tuple = RawTuple { seq, ..Default::default() };
        for (key, value) in object {
            let text = match value {
                Value::Null => None,
                Value::String(s) => Some(s.clone()),
                Value::Number(n) => Some(n.to_string()),
                Value::Bool(b) => Some(b.to_string()),
                other => Some(other.to_string()),
            };
            match attribute_slot(key) {
                Some(slot) => tuple.values[slot] = text,
                None => tuple.extra.push((key.clone(), text.unwrap_or_default())),
            }
        }
        tuple.extra.sort();
        tuple
    }

    /// Wire form: schema attributes in order, numbers where the text parses as
    /// one, then extra attributes.
    pub fn to_json_object(&self) -> serde_json::Map<String, Value> {
        let mut map = serde_json::Map::new();
        for (slot, name) in ATTRIBUTE_NAMES.iter().enumerate() {
            let Some(text) = &self.values[slot] else { continue };
            let value = match slot {
                LAT_SLOT | LNG_SLOT => text
                    .parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .filter(|n| n.to_string() == *text)
                    .map(Value::Number)
                    .unwrap_or_else(|| Value::String(text.clone())),
                TIMESTAMP_SLOT => text
                    .parse::<i64>()
                    .ok()
                    .filter(|n| n.to_string() == *text)
                    .map(|n| Value::Number(n.into()))
                    .unwrap_or_else(|| Value::String(text.clone())),
                _ => Value::String(text.clone()),
            };
            map.insert((*name).to_string(), value);
        }
        for (k, v) in &self.extra {
            map.insert(k.clone(), Value::String(v.clone()));
        }
        map
    }
}

/// The 14 descriptor values of a cleaned tuple, in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Descriptors(pub [String; 14]);

impl Descriptors {
    pub fn get(&self, name: &str) -> Option<&str> {
        DESCRIPTOR_NAMES.iter().position(|n| *n == name).map(|i| self.0[i].as_str())
    }

    pub fn route_id(&self) -> &str {
        &self.0[ROUTE_ID_SLOT]
    }

    pub fn trip_id(&self) -> &str {
        &self.0[TRIP_ID_SLOT]
    }
}

/// A tuple that passed cleaning: exactly 14 descriptors, a valid position and
/// a parsed timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanTuple {
    pub seq: u64,
    pub descriptors: Descriptors,
    pub position: LatLng,
    pub timestamp: Timestamp,
}

impl CleanTuple {
    pub fn key(&self) -> Result<TripKey, ModelError> {
        TripKey::new(self.descriptors.route_id(), self.descriptors.trip_id(), self.timestamp.date())
    }

    fn write_fields<M: SerializeMap>(&self, map: &mut M) -> Result<(), M::Error> {
        for (name, value) in DESCRIPTOR_NAMES.iter().zip(self.descriptors.0.iter()) {
            map.serialize_entry(name, value)?;
        }
        map.serialize_entry("lat", &self.position.lat)?;
        map.serialize_entry("lng", &self.position.lng)?;
        map.serialize_entry("timestamp", &self.timestamp.0)
    }

    /// Reads the 17-attribute wire form produced by the cleaning stage.
    pub fn from_json_object(seq: u64, object: &serde_json::Map<String, Value>) -> Result<Self, ModelError> {
        let mut descriptors = Descriptors::default();
        for (i, name) in DESCRIPTOR_NAMES.iter().enumerate() {
            descriptors.0[i] = match object.get(*name) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(ModelError::MissingAttribute((*name).to_string())),
            };
        }
        let number = |name: &str| -> Result<f64, ModelError> {
            match object.get(name) {
                Some(Value::Number(n)) => n.as_f64().ok_or_else(|| ModelError::BadValue(name.to_string())),
                Some(Value::String(s)) => s.trim().parse().map_err(|_| ModelError::BadValue(name.to_string())),
                _ => Err(ModelError::MissingAttribute(name.to_string())),
            }
        };
        let position = LatLng::new(number("lat")?, number("lng")?);
        if !position.is_valid() {
            return Err(ModelError::BadValue("lat/lng".to_string()));
        }
        let timestamp = match object.get("timestamp") {
            Some(Value::Number(n)) => Timestamp::parse(&n.to_string())?,
            Some(Value::String(s)) => Timestamp::parse(s)?,
            _ => return Err(ModelError::MissingAttribute("timestamp".to_string())),
        };
        Ok(CleanTuple { seq, descriptors, position, timestamp })
    }
}

impl Serialize for CleanTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(17))?;
        self.write_fields(&mut map)?;
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionLabel {
    Stop,
    Move,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Running,
    Passing,
    SuspensionOfMovement,
    Stopover,
}

impl ActivityClass {
    pub const ALL: [ActivityClass; 4] =
        [ActivityClass::Running, ActivityClass::Passing, ActivityClass::Stopover, ActivityClass::SuspensionOfMovement];

    pub fn classify(motion: MotionLabel, in_station_zone: bool) -> Self {
        match (motion, in_station_zone) {
            (MotionLabel::Stop, true) => ActivityClass::Stopover,
            (MotionLabel::Stop, false) => ActivityClass::SuspensionOfMovement,
            (MotionLabel::Move, true) => ActivityClass::Passing,
            (MotionLabel::Move, false) => ActivityClass::Running,
        }
    }

    pub fn motion(self) -> MotionLabel {
        match self {
            ActivityClass::Running | ActivityClass::Passing => MotionLabel::Move,
            ActivityClass::Stopover | ActivityClass::SuspensionOfMovement => MotionLabel::Stop,
        }
    }

    pub fn at_station(self) -> bool {
        matches!(self, ActivityClass::Passing | ActivityClass::Stopover)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityClass::Running => "running",
            ActivityClass::Passing => "passing",
            ActivityClass::SuspensionOfMovement => "suspension_of_movement",
            ActivityClass::Stopover => "stopover",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outbound,
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StationTag {
    pub station_id: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreetAnnotation {
    Segment(Arc<str>),
    WrongSegment,
}

impl StreetAnnotation {
    pub fn as_str(&self) -> &str {
        match self {
            StreetAnnotation::Segment(name) => name,
            StreetAnnotation::WrongSegment => WRONG_STREET_SEGMENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationEvent {
    Arrival,
    Departure,
    ArrivalAndDeparture,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TripPosition {
    Origin,
    Destination,
    /// 1-based index of an interior tuple.
    Index(u32),
}

impl Serialize for TripPosition {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TripPosition::Origin => serializer.serialize_str("origin"),
            TripPosition::Destination => serializer.serialize_str("destination"),
            TripPosition::Index(i) => serializer.serialize_u32(*i),
        }
    }
}

/// A cleaned tuple enriched with the seven mobility-context attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTuple {
    pub base: CleanTuple,
    pub motion: MotionLabel,
    pub activity: ActivityClass,
    pub street: StreetAnnotation,
    pub station: Option<StationTag>,
    pub intersection: Option<String>,
    pub event: StationEvent,
    pub position: TripPosition,
}

impl Serialize for ContextTuple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(24))?;
        self.base.write_fields(&mut map)?;
        map.serialize_entry("a18_motion", &self.motion)?;
        map.serialize_entry("a19_activity", &self.activity)?;
        map.serialize_entry("a20_street", self.street.as_str())?;
        map.serialize_entry("a21_station", &self.station)?;
        map.serialize_entry("a22_intersection", &self.intersection)?;
        map.serialize_entry("a23_event", &self.event)?;
        map.serialize_entry("a24_trip_position", &self.position)?;
        map.end()
    }
}
