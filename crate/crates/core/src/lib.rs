//! Cleaning and mobility-context enrichment of transit GPS feeds.
//!
//! Tuples flow from [`ingestion`] into a store, through [`cleaning`] into
//! trip-grouped datasets, and through the keyed [`engine`] that runs the
//! [`context`] steps per trip against [`reference`] data.

pub mod cleaning;
pub mod config;
pub mod context;
pub mod engine;
pub mod error;
pub mod geo;
pub mod ingestion;
pub mod io;
pub mod model;
pub mod reference;

pub use config::EngineConfig;
pub use model::{
    ActivityClass, CleanTuple, ContextTuple, Direction, LatLng, MotionLabel, RawTuple, StationEvent, StationTag,
    StreetAnnotation, Timestamp, TripKey, TripPosition,
};
