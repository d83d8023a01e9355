//! Keyed map → shuffle → reduce execution of cleaned tuples.
//!
//! Map extracts a [`TripKey`] per tuple, shuffle groups by key into jobs
//! ordered by the key order with tuples sorted by `(timestamp, seq)`, and
//! reduce contextualizes jobs on a pool of scoped worker threads. Results are
//! reassembled by job index, so outputs are identical for every worker count.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cleaning::{clean_dataset, CanonTable, CleanConfig, CleanReport};
use crate::config::EngineConfig;
use crate::context::{contextualize_trip, ContextConfig, StationVisit, TripContext};
use crate::error::EngineError;
use crate::io::{write_json_pretty, write_ndjson, write_ndjson_to};
use crate::model::{
    ActivityClass, CleanTuple, ContextTuple, Direction, MotionLabel, RawTuple, StreetAnnotation, TripKey,
};
use crate::reference::ReferenceData;

pub const CLEANED_FILE: &str = "cleaned.ndjson";
pub const CLEAN_REPORT_FILE: &str = "clean_report.json";
pub const CONTEXT_FILE: &str = "context.ndjson";
pub const VISITS_FILE: &str = "station_visits.ndjson";
pub const RUN_REPORT_FILE: &str = "run_report.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionJob {
    pub key: TripKey,
    pub tuples: Vec<CleanTuple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub seq: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedJob {
    pub key: String,
    pub reason: String,
}

/// Keys each tuple by route id, trip id and the UTC date of its timestamp.
pub fn map_phase(tuples: impl IntoIterator<Item = CleanTuple>) -> (Vec<(TripKey, CleanTuple)>, Vec<Reject>) {
    let mut pairs = Vec::new();
    let mut rejects = Vec::new();
    for t in tuples {
        match t.key() {
            Ok(key) => pairs.push((key, t)),
            Err(e) => rejects.push(Reject { seq: t.seq, reason: e.to_string() }),
        }
    }
    (pairs, rejects)
}

/// One job per key in key order, tuples sorted by `(timestamp, seq)`.
pub fn shuffle(pairs: impl IntoIterator<Item = (TripKey, CleanTuple)>) -> Vec<PartitionJob> {
    let mut groups: BTreeMap<TripKey, Vec<CleanTuple>> = BTreeMap::new();
    for (key, t) in pairs {
        groups.entry(key).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|(key, mut tuples)| {
            tuples.sort_by_key(|t| (t.timestamp, t.seq));
            PartitionJob { key, tuples }
        })
        .collect()
}

pub fn resolve_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Runs `f` over every job on `workers` threads. Each worker claims the next
/// unprocessed job index; a panicking job yields an error for that job only.
/// Results come back in job order.
pub fn reduce_with<R, F>(jobs: &[PartitionJob], workers: usize, f: F) -> Vec<Result<R, String>>
where
    R: Send,
    F: Fn(&PartitionJob) -> Result<R, String> + Sync,
{
    let workers = workers.clamp(1, jobs.len().max(1));
    let cursor = AtomicUsize::new(0);
    let run = |job: &PartitionJob| match catch_unwind(AssertUnwindSafe(|| f(job))) {
        Ok(result) => result,
        Err(panic) => Err(panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "job panicked".to_string())),
    };
    let parts: Vec<Vec<(usize, Result<R, String>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = cursor.fetch_add(1, Ordering::Relaxed);
                        let Some(job) = jobs.get(i) else { break };
                        done.push((i, run(job)));
                    }
                    done
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker threads catch job panics")).collect()
    });
    let mut slots: Vec<Option<Result<R, String>>> = (0..jobs.len()).map(|_| None).collect();
    for (i, result) in parts.into_iter().flatten() {
        slots[i] = Some(result);
    }
    slots.into_iter().map(|r| r.expect("every job claimed exactly once")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReduceOutput {
    pub contexts: Vec<(TripKey, TripContext)>,
    pub failures: Vec<FailedJob>,
}

pub fn context_config(config: &EngineConfig) -> ContextConfig {
    ContextConfig { stop_move_threshold_m: config.stop_move_threshold_m, midpoint_radius_m: config.station_radius_m }
}

/// Contextualizes every job; failed jobs are reported and skipped.
pub fn reduce_phase(
    jobs: &[PartitionJob],
    reference: &ReferenceData,
    config: &ContextConfig,
    workers: usize,
) -> ReduceOutput {
    let results = reduce_with(jobs, workers, |job| {
        contextualize_trip(&job.key, &job.tuples, reference, config).map_err(|e| e.to_string())
    });
    let mut out = ReduceOutput { contexts: Vec::new(), failures: Vec::new() };
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(ctx) => out.contexts.push((job.key.clone(), ctx)),
            Err(reason) => out.failures.push(FailedJob { key: job.key.to_string(), reason }),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityCounts {
    pub moves: u64,
    pub stops: u64,
    pub running: u64,
    pub passing: u64,
    pub stopover: u64,
    pub suspension_of_movement: u64,
    pub wrong_street_segment: u64,
    pub at_intersection: u64,
}

impl ActivityCounts {
    pub fn of(tuples: &[ContextTuple]) -> Self {
        let mut c = ActivityCounts::default();
        for t in tuples {
            c.add(t);
        }
        c
    }

    fn add(&mut self, t: &ContextTuple) {
        match t.motion {
            MotionLabel::Move => self.moves += 1,
            MotionLabel::Stop => self.stops += 1,
        }
        match t.activity {
            ActivityClass::Running => self.running += 1,
            ActivityClass::Passing => self.passing += 1,
            ActivityClass::Stopover => self.stopover += 1,
            ActivityClass::SuspensionOfMovement => self.suspension_of_movement += 1,
        }
        if t.street == StreetAnnotation::WrongSegment {
            self.wrong_street_segment += 1;
        }
        if t.intersection.is_some() {
            self.at_intersection += 1;
        }
    }

    fn merge(&mut self, o: &ActivityCounts) {
        self.moves += o.moves;
        self.stops += o.stops;
        self.running += o.running;
        self.passing += o.passing;
        self.stopover += o.stopover;
        self.suspension_of_movement += o.suspension_of_movement;
        self.wrong_street_segment += o.wrong_street_segment;
        self.at_intersection += o.at_intersection;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripSummary {
    pub key: String,
    pub tuples: u64,
    pub counts: ActivityCounts,
    pub station_visits: u64,
}

/// Station visit as written to the visits table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub route_id: String,
    pub trip_id: String,
    pub service_date: String,
    pub station_id: String,
    pub direction: Direction,
    pub arrival: i64,
    pub departure: i64,
    pub dwell_s: i64,
    pub tuples: usize,
    pub first_index: usize,
    pub last_index: usize,
}

impl VisitRecord {
    pub fn new(key: &TripKey, v: &StationVisit) -> Self {
        VisitRecord {
            route_id: key.route_id.clone(),
            trip_id: key.trip_id.clone(),
            service_date: key.service_date.format("%Y-%m-%d").to_string(),
            station_id: v.station_id.clone(),
            direction: v.direction,
            arrival: v.arrival.0,
            departure: v.departure.0,
            dwell_s: v.departure.0 - v.arrival.0,
            tuples: v.members.len(),
            first_index: v.members[0],
            last_index: *v.members.last().expect("visits are non-empty"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted,
}

/// Everything about a run except wall-clock timings, which live in
/// [`PhaseTiming`] so that this report is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub clean: Option<CleanReport>,
    pub input_tuples: u64,
    pub partitions: u64,
    pub context_tuples: u64,
    pub station_visits: u64,
    pub totals: ActivityCounts,
    pub rejects: Vec<Reject>,
    pub failed_jobs: Vec<FailedJob>,
    /// Trips with a single tuple: an origin but no destination.
    pub degenerate_trips: Vec<String>,
    pub trips: Vec<TripSummary>,
}

impl RunReport {
    fn aborted(clean: Option<CleanReport>, error: String) -> Self {
        RunReport {
            status: RunStatus::Aborted,
            error: Some(error),
            clean,
            input_tuples: 0,
            partitions: 0,
            context_tuples: 0,
            station_visits: 0,
            totals: ActivityCounts::default(),
            rejects: Vec::new(),
            failed_jobs: Vec::new(),
            degenerate_trips: Vec::new(),
            trips: Vec::new(),
        }
    }
}

/// Wall-clock seconds per phase. Phases that did not run report zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub clean_s: f64,
    pub map_s: f64,
    pub shuffle_s: f64,
    pub reduce_s: f64,
    pub partitions: u64,
    pub workers: usize,
}

/// In-memory result of map, shuffle and reduce over cleaned tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub context_ndjson: Vec<u8>,
    pub visits_ndjson: Vec<u8>,
    pub report: RunReport,
    pub timing: PhaseTiming,
}

struct JobResult {
    context: Vec<u8>,
    visits: Vec<u8>,
    summary: TripSummary,
    visit_count: u64,
    degenerate: bool,
}

fn encode_job(key: &TripKey, ctx: &TripContext) -> Result<JobResult, String> {
    let mut context = Vec::with_capacity(ctx.tuples.len() * 640);
    write_ndjson_to(&mut context, &ctx.tuples).map_err(|e| e.to_string())?;
    let mut visits = Vec::new();
    write_ndjson_to(&mut visits, ctx.visits.iter().map(|v| VisitRecord::new(key, v))).map_err(|e| e.to_string())?;
    Ok(JobResult {
        context,
        visits,
        summary: TripSummary {
            key: key.to_string(),
            tuples: ctx.tuples.len() as u64,
            counts: ActivityCounts::of(&ctx.tuples),
            station_visits: ctx.visits.len() as u64,
        },
        visit_count: ctx.visits.len() as u64,
        degenerate: ctx.tuples.len() == 1,
    })
}

/// Map, shuffle and reduce over cleaned tuples, serializing each job's output
/// on the worker that produced it.
pub fn run_stages(
    cleaned: Vec<CleanTuple>,
    reference: &ReferenceData,
    config: &EngineConfig,
    clean: Option<CleanReport>,
) -> StageOutput {
    let workers = resolve_workers(config.workers);
    let mut timing = PhaseTiming { workers, ..Default::default() };
    let input_tuples = cleaned.len() as u64;
    let mut report =
        RunReport { status: RunStatus::Complete, input_tuples, ..RunReport::aborted(clean, String::new()) };
    report.error = None;
    if cleaned.is_empty() {
        return StageOutput { context_ndjson: Vec::new(), visits_ndjson: Vec::new(), report, timing };
    }

    let started = Instant::now();
    let (pairs, rejects) = map_phase(cleaned);
    timing.map_s = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let jobs = shuffle(pairs);
    timing.shuffle_s = started.elapsed().as_secs_f64();
    timing.partitions = jobs.len() as u64;

    let ctx_config = context_config(config);
    let started = Instant::now();
    let results = reduce_with(&jobs, workers, |job| {
        let ctx = contextualize_trip(&job.key, &job.tuples, reference, &ctx_config).map_err(|e| e.to_string())?;
        encode_job(&job.key, &ctx)
    });
    let mut context_ndjson = Vec::new();
    let mut visits_ndjson = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(r) => {
                context_ndjson.extend_from_slice(&r.context);
                visits_ndjson.extend_from_slice(&r.visits);
                report.context_tuples += r.summary.tuples;
                report.station_visits += r.visit_count;
                report.totals.merge(&r.summary.counts);
                if r.degenerate {
                    report.degenerate_trips.push(r.summary.key.clone());
                }
                report.trips.push(r.summary);
            }
            Err(reason) => report.failed_jobs.push(FailedJob { key: job.key.to_string(), reason }),
        }
    }
    timing.reduce_s = started.elapsed().as_secs_f64();

    report.partitions = jobs.len() as u64;
    report.rejects = rejects;
    StageOutput { context_ndjson, visits_ndjson, report, timing }
}

fn io_err(stage: &'static str) -> impl FnOnce(std::io::Error) -> EngineError {
    move |source| EngineError::Io { stage, source }
}

/// Writes stage outputs plus report and timing into `dir`.
pub fn write_stage_output(dir: &Path, out: &StageOutput) -> Result<(), EngineError> {
    fs::create_dir_all(dir).map_err(io_err("output"))?;
    fs::write(dir.join(CONTEXT_FILE), &out.context_ndjson).map_err(io_err("reduce"))?;
    fs::write(dir.join(VISITS_FILE), &out.visits_ndjson).map_err(io_err("reduce"))?;
    write_json_pretty(&dir.join(RUN_REPORT_FILE), &out.report).map_err(io_err("report"))?;
    write_json_pretty(&dir.join(TIMING_FILE), &out.timing).map_err(io_err("report"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub report: RunReport,
    pub timing: PhaseTiming,
}

/// Clean, map, shuffle and reduce `raw`, writing every artifact into
/// `out_dir`. If a stage fails after the directory exists, an aborted run
/// report naming the stage is left behind.
pub fn run_pipeline(
    raw: Vec<RawTuple>,
    reference: &ReferenceData,
    canon: &CanonTable,
    config: &EngineConfig,
    out_dir: &Path,
) -> Result<PipelineSummary, EngineError> {
    fs::create_dir_all(out_dir).map_err(io_err("output"))?;
    let abort = |clean: Option<CleanReport>, err: EngineError| {
        let _ = write_json_pretty(&out_dir.join(RUN_REPORT_FILE), &RunReport::aborted(clean, err.to_string()));
        err
    };

    let started = Instant::now();
    let clean_config = CleanConfig { cadence_s: config.cadence_s, sparse_trip_threshold: config.sparse_trip_threshold };
    let cleaned = clean_dataset(raw, canon, &clean_config);
    let clean_s = started.elapsed().as_secs_f64();
    let clean_report = cleaned.report.clone();
    write_ndjson(&out_dir.join(CLEANED_FILE), cleaned.tuples())
        .and_then(|_| write_json_pretty(&out_dir.join(CLEAN_REPORT_FILE), &clean_report))
        .map_err(|e| abort(None, EngineError::Io { stage: "clean", source: e }))?;

    let mut out = run_stages(cleaned.into_tuples(), reference, config, Some(clean_report.clone()));
    out.timing.clean_s = clean_s;
    write_stage_output(out_dir, &out).map_err(|e| abort(Some(clean_report), e))?;
    Ok(PipelineSummary { report: out.report, timing: out.timing })
}
