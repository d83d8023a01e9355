use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::ingestion::IngestSummary;
use crate::model::TripKey;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unparseable timestamp {0:?}")]
    Timestamp(String),
    #[error("trip key field `{0}` is empty")]
    EmptyKeyField(&'static str),
    #[error("missing attribute `{0}`")]
    MissingAttribute(String),
    #[error("invalid value for `{0}`")]
    BadValue(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("point ({lat}, {lng}) is {distance_m:.0} m from the frame origin (limit {limit_m:.0} m)")]
    OutOfRange { lat: f64, lng: f64, distance_m: f64, limit_m: f64 },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt store record at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("invalid range: from {from} is after to {to}")]
    InvalidRange { from: i64, to: i64 },
}

#[derive(Debug, Error)]
pub enum SourceError {
    /// A read that may succeed if retried.
    #[error("transient read failure: {0}")]
    Transient(String),
    /// A record that can never be read, e.g. a malformed line.
    #[error("malformed record at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot open source {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("store write failed after {} tuples: {source}", .summary.tuples)]
    Store { summary: Box<IngestSummary>, source: StoreError },
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("route geometry needs at least two distinct points")]
    DegenerateGeometry,
    #[error("invalid defect profile: {0}")]
    Profile(String),
}

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error("GTFS file {0} is missing")]
    MissingFile(PathBuf),
    #[error("cannot read {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("GTFS validation failed: {0}")]
    Validation(String),
    #[error("leg {0} of route {1} has no street name")]
    UnnamedLeg(usize, String),
    #[error("degenerate polyline: {0}")]
    DegeneratePolyline(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("route {0} has no reference data")]
    UnknownRoute(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("tuple {index} is a {class} outside every station zone")]
    StationInvariant { index: usize, class: &'static str },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{stage}: {source}")]
    Io { stage: &'static str, source: io::Error },
    #[error("{stage}: {reason}")]
    Input { stage: &'static str, reason: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("job {key} failed: {reason}")]
    Job { key: TripKey, reason: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
}
