//! Intended per-tuple labels of a designed trip.

use serde::Serialize;
use transitflow::engine::ActivityCounts;
use transitflow::ingestion::synthetic::DefectInventory;
use transitflow::model::{ActivityClass, ContextTuple, MotionLabel, StationEvent, StationTag, TripPosition};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthLabel {
    pub motion: MotionLabel,
    pub activity: ActivityClass,
    pub street: String,
    pub station: Option<StationTag>,
    pub intersection: Option<String>,
    pub event: StationEvent,
    pub position: TripPosition,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroundTruth {
    /// One label per generated tuple, in trip order.
    pub labels: Vec<TruthLabel>,
    pub inventory: DefectInventory,
}

impl GroundTruth {
    pub fn counts(&self) -> ActivityCounts {
        let mut c = ActivityCounts::default();
        for l in &self.labels {
            match l.motion {
                MotionLabel::Move => c.moves += 1,
                MotionLabel::Stop => c.stops += 1,
            }
            match l.activity {
                ActivityClass::Running => c.running += 1,
                ActivityClass::Passing => c.passing += 1,
                ActivityClass::Stopover => c.stopover += 1,
                ActivityClass::SuspensionOfMovement => c.suspension_of_movement += 1,
            }
            if l.street == transitflow::model::WRONG_STREET_SEGMENT {
                c.wrong_street_segment += 1;
            }
            if l.intersection.is_some() {
                c.at_intersection += 1;
            }
        }
        c
    }

    /// Human-readable differences between `output` and the intended labels.
    pub fn mismatches(&self, output: &[ContextTuple]) -> Vec<String> {
        let mut out = Vec::new();
        if output.len() != self.labels.len() {
            out.push(format!("{} tuples, expected {}", output.len(), self.labels.len()));
        }
        for (i, (got, want)) in output.iter().zip(&self.labels).enumerate() {
            let mut diff = |field: &str, g: String, w: String| {
                if g != w {
                    out.push(format!("tuple {i} {field}: got {g}, expected {w}"));
                }
            };
            diff("motion", format!("{:?}", got.motion), format!("{:?}", want.motion));
            diff("activity", format!("{:?}", got.activity), format!("{:?}", want.activity));
            diff("street", got.street.as_str().to_string(), want.street.clone());
            diff("station", format!("{:?}", got.station), format!("{:?}", want.station));
            diff("intersection", format!("{:?}", got.intersection), format!("{:?}", want.intersection));
            diff("event", format!("{:?}", got.event), format!("{:?}", want.event));
            diff("position", format!("{:?}", got.position), format!("{:?}", want.position));
        }
        out
    }
}
