//! Event-time windowed ingestion into a tuple store.
//!
//! Every tuple belongs to the 5-second window containing its own timestamp,
//! whatever order it arrives in. In replay mode windows close at end of
//! stream; in real-time mode a window closes once the watermark (largest
//! event time seen minus the allowed lateness) passes its end, and tuples for
//! closed windows are appended immediately with the `late` flag set.

pub mod source;
pub mod store;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{IngestError, SourceError};
use crate::model::{RawTuple, Timestamp};

pub use source::{ServingRate, SourceKind, StreamSource, TupleReader};
pub use store::{FileStore, MemoryStore, TupleStore};

pub const WINDOW_WIDTH_S: i64 = 5;

/// Half-open event-time interval `[start, end)` and the tuples inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventWindow {
    pub start: Timestamp,
    pub end: Timestamp,
    pub tuples: Vec<RawTuple>,
}

/// Start of the window of width `width_s` containing `ts`.
pub fn window_start(ts: Timestamp, width_s: i64) -> Timestamp {
    Timestamp(ts.0.div_euclid(width_s) * width_s)
}

/// Groups tuples into event windows by timestamp. Tuples without a readable
/// timestamp are returned separately.
pub fn assign_windows(tuples: impl IntoIterator<Item = RawTuple>, width_s: i64) -> (Vec<EventWindow>, Vec<RawTuple>) {
    let mut windows: BTreeMap<i64, Vec<RawTuple>> = BTreeMap::new();
    let mut unwindowed = Vec::new();
    for t in tuples {
        match t.timestamp() {
            Some(ts) => windows.entry(window_start(ts, width_s).0).or_default().push(t),
            None => unwindowed.push(t),
        }
    }
    let windows = windows
        .into_iter()
        .map(|(start, tuples)| EventWindow { start: Timestamp(start), end: Timestamp(start + width_s), tuples })
        .collect();
    (windows, unwindowed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IngestMode {
    /// Windows close at end of stream.
    Replay,
    /// Windows close when the watermark passes them.
    RealTime { allowed_lateness_s: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopCondition {
    EndOfStream,
    MaxTuples(u64),
    WallClock(Duration),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
    /// Exhausted retry rounds in a row after which the source is treated as ended.
    pub max_consecutive_gaps: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, initial_backoff: Duration::from_millis(10), max_consecutive_gaps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadGap {
    /// Source cursor when the failure happened.
    pub position: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub tuples: u64,
    pub windows: u64,
    pub late_tuples: u64,
    /// Tuples without a readable timestamp; stored, but not windowed.
    pub unwindowed: u64,
    pub retries: u64,
    pub gaps: Vec<ReadGap>,
}

struct Ingestor<'a> {
    store: &'a mut dyn TupleStore,
    mode: IngestMode,
    width: i64,
    open: BTreeMap<i64, Vec<RawTuple>>,
    seen_windows: BTreeSet<i64>,
    closed_before: i64,
    max_event: Option<i64>,
    next_seq: u64,
    summary: IngestSummary,
}

impl Ingestor<'_> {
    fn store_err(&mut self, source: crate::error::StoreError) -> IngestError {
        IngestError::Store { summary: Box::new(self.summary.clone()), source }
    }

    fn accept(&mut self, mut tuple: RawTuple) -> Result<(), IngestError> {
        tuple.seq = self.next_seq;
        self.next_seq += 1;
        self.summary.tuples += 1;
        let Some(ts) = tuple.timestamp() else {
            self.summary.unwindowed += 1;
            return self.store.append(std::slice::from_ref(&tuple)).map(|_| ()).map_err(|e| self.store_err(e));
        };
        let start = window_start(ts, self.width).0;
        self.seen_windows.insert(start);
        if start < self.closed_before {
            tuple.late = true;
            self.summary.late_tuples += 1;
            return self.store.append(std::slice::from_ref(&tuple)).map(|_| ()).map_err(|e| self.store_err(e));
        }
        self.open.entry(start).or_default().push(tuple);
        if let IngestMode::RealTime { allowed_lateness_s } = self.mode {
            let max_event = self.max_event.map_or(ts.0, |m| m.max(ts.0));
            self.max_event = Some(max_event);
            self.flush_until(max_event - allowed_lateness_s)?;
        }
        Ok(())
    }

    /// Closes every open window whose end is at or before `watermark`.
    fn flush_until(&mut self, watermark: i64) -> Result<(), IngestError> {
        while let Some(entry) = self.open.first_entry() {
            if entry.key() + self.width > watermark {
                break;
            }
            let start = *entry.key();
            let batch = entry.remove();
            self.closed_before = self.closed_before.max(start + self.width);
            self.store.append(&batch).map_err(|e| self.store_err(e))?;
        }
        Ok(())
    }
}

/// Pulls tuples from `source` until `stop` triggers or the stream ends and
/// persists each exactly once. Ingest sequence numbers are assigned in arrival
/// order.
pub fn ingest_loop(
    source: &mut StreamSource,
    store: &mut dyn TupleStore,
    stop: &StopCondition,
    mode: IngestMode,
    retry: RetryPolicy,
) -> Result<IngestSummary, IngestError> {
    let started = Instant::now();
    let next_seq = store.len() as u64;
    let mut ing = Ingestor {
        store,
        mode,
        width: WINDOW_WIDTH_S,
        open: BTreeMap::new(),
        seen_windows: BTreeSet::new(),
        closed_before: i64::MIN,
        max_event: None,
        next_seq,
        summary: IngestSummary::default(),
    };

    let mut consecutive_gaps = 0;
    'outer: loop {
        if consecutive_gaps >= retry.max_consecutive_gaps.max(1) {
            break;
        }
        match stop {
            StopCondition::MaxTuples(n) if ing.summary.tuples >= *n => break,
            StopCondition::WallClock(d) if started.elapsed() >= *d => break,
            _ => {}
        }
        let mut attempt = 0;
        let next = loop {
            match source.next_tuple() {
                Ok(t) => break t,
                Err(SourceError::Transient(reason)) => {
                    if attempt >= retry.max_retries {
                        ing.summary.gaps.push(ReadGap { position: source.cursor(), reason });
                        consecutive_gaps += 1;
                        continue 'outer;
                    }
                    std::thread::sleep(retry.initial_backoff * 2u32.pow(attempt));
                    attempt += 1;
                    ing.summary.retries += 1;
                }
                Err(SourceError::Malformed { line, reason }) => {
                    ing.summary
                        .gaps
                        .push(ReadGap { position: source.cursor(), reason: format!("line {line}: {reason}") });
                    continue 'outer;
                }
                Err(e @ SourceError::Open { .. }) => return Err(e.into()),
            }
        };
        consecutive_gaps = 0;
        match next {
            Some(tuple) => ing.accept(tuple)?,
            None => break,
        }
    }
    ing.flush_until(i64::MAX)?;
    ing.summary.windows = ing.seen_windows.len() as u64;
    Ok(ing.summary)
}
