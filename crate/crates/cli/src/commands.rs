use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use thiserror::Error;
use transitflow::cleaning::{clean_dataset, CanonTable, CleanConfig};
use transitflow::engine::{run_pipeline, run_stages, RunReport};
use transitflow::ingestion::{
    ingest_loop, FileStore, IngestMode, RetryPolicy, ServingRate, StopCondition, StreamSource, TupleStore,
};
use transitflow::io::{read_clean_ndjson, write_json_pretty, write_ndjson};
use transitflow::reference::ReferenceData;
use transitflow::EngineConfig;
use transitflow_synth::{build_acceptance_corpus, detour_fixture, loop_trip_fixture, CorpusConfig};

use crate::{CleanArgs, ContextualizeArgs, GenerateArgs, Generated, IngestArgs, PipelineArgs};

pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.json";
/// Subdirectory of the store that receives a synthetic corpus' reference data.
pub const SYNTH_DIR: &str = "synth";

#[derive(Debug, Error)]
#[error("{stage} failed: {message}")]
pub struct Failure {
    pub stage: &'static str,
    pub message: String,
}

pub fn at<E: Display>(stage: &'static str) -> impl FnOnce(E) -> Failure {
    move |e| Failure { stage, message: e.to_string() }
}

fn engine_config(path: Option<&Path>, workers: Option<usize>) -> Result<EngineConfig, Failure> {
    let mut config = match path {
        Some(p) => EngineConfig::load(p).map_err(at("config"))?,
        None => EngineConfig::default(),
    };
    if let Some(w) = workers {
        config.workers = w;
    }
    Ok(config)
}

fn canon_table(path: Option<&Path>) -> Result<CanonTable, Failure> {
    path.map_or_else(|| Ok(CanonTable::new()), |p| CanonTable::load(p).map_err(at("config")))
}

/// Writes a line to stdout; a closed pipe is not an error.
fn say(line: impl Display) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn print_json<T: Serialize>(value: &T) {
    say(serde_json::to_string_pretty(value).expect("serializable"));
}

fn check_failed_jobs(report: &RunReport) -> Result<(), Failure> {
    match report.failed_jobs.first() {
        None => Ok(()),
        Some(first) => Err(Failure {
            stage: "reduce",
            message: format!("{} partition(s) failed, first {}: {}", report.failed_jobs.len(), first.key, first.reason),
        }),
    }
}

pub fn ingest(args: &IngestArgs) -> Result<(), Failure> {
    let config = engine_config(args.config.as_deref(), None)?;
    let rate = if args.real_time {
        if args.speedup.is_nan() || args.speedup <= 0.0 {
            return Err(Failure { stage: "ingest", message: format!("speedup {} must be positive", args.speedup) });
        }
        ServingRate::RealTime { speedup: args.speedup }
    } else {
        ServingRate::MaxSpeed
    };
    let mut source = match (&args.source, &args.synth) {
        (Some(path), _) => StreamSource::replay_file(path, rate).map_err(at("ingest"))?,
        (None, Some(cfg)) => {
            let text = fs::read_to_string(cfg).map_err(at("synth"))?;
            let corpus_config = CorpusConfig::from_toml_str(&text).map_err(at("synth"))?;
            let corpus = build_acceptance_corpus(&corpus_config).map_err(at("synth"))?;
            corpus.write(&args.store.join(SYNTH_DIR)).map_err(at("synth"))?;
            StreamSource::from_tuples(corpus.tuples().to_vec(), rate)
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    let mut store = FileStore::open(&args.store).map_err(at("ingest"))?;
    let mode = if args.real_time {
        IngestMode::RealTime { allowed_lateness_s: config.allowed_lateness_s }
    } else {
        IngestMode::Replay
    };
    let stop = match args.duration {
        Some(s) if s.is_finite() && s >= 0.0 => StopCondition::WallClock(Duration::from_secs_f64(s)),
        Some(s) => return Err(Failure { stage: "ingest", message: format!("invalid duration {s}") }),
        None => StopCondition::EndOfStream,
    };
    let summary = ingest_loop(&mut source, &mut store, &stop, mode, RetryPolicy::default()).map_err(at("ingest"))?;
    write_json_pretty(&args.store.join(INGEST_SUMMARY_FILE), &summary).map_err(at("ingest"))?;
    print_json(&summary);
    Ok(())
}

pub fn clean(args: &CleanArgs) -> Result<(), Failure> {
    let config = engine_config(args.config.as_deref(), None)?;
    let canon = canon_table(args.canon.as_deref())?;
    let store = FileStore::open_existing(&args.store).map_err(at("clean"))?;
    let raw = store.scan().map_err(at("clean"))?;
    let clean_config = CleanConfig { cadence_s: config.cadence_s, sparse_trip_threshold: config.sparse_trip_threshold };
    let out = clean_dataset(raw, &canon, &clean_config);
    write_ndjson(&args.out, out.tuples()).map_err(at("clean"))?;
    write_json_pretty(&args.report, &out.report).map_err(at("clean"))?;
    print_json(&out.report);
    Ok(())
}

pub fn contextualize(args: &ContextualizeArgs) -> Result<(), Failure> {
    let config = engine_config(args.config.as_deref(), args.workers)?;
    let tuples = read_clean_ndjson(&args.input).map_err(at("contextualize"))?;
    let reference = ReferenceData::load(&args.gtfs, &args.geometry, &config).map_err(at("reference"))?;
    let out = run_stages(tuples, &reference, &config, None);
    fs::write(&args.out, &out.context_ndjson).map_err(at("contextualize"))?;
    if let Some(path) = &args.visits {
        fs::write(path, &out.visits_ndjson).map_err(at("contextualize"))?;
    }
    if let Some(path) = &args.report {
        write_json_pretty(path, &out.report).map_err(at("contextualize"))?;
    }
    say(format_args!("{} tuples enriched, {} station visits", out.report.context_tuples, out.report.station_visits));
    check_failed_jobs(&out.report)
}

pub fn pipeline(args: &PipelineArgs) -> Result<(), Failure> {
    let config = engine_config(args.config.as_deref(), args.workers)?;
    let canon = canon_table(args.canon.as_deref())?;
    let reference = ReferenceData::load(&args.gtfs, &args.geometry, &config).map_err(at("reference"))?;
    let store = FileStore::open_existing(&args.store).map_err(at("ingest"))?;
    let raw = store.scan().map_err(at("ingest"))?;
    let summary = run_pipeline(raw, &reference, &canon, &config, &args.out).map_err(at("pipeline"))?;
    let r = &summary.report;
    let cleaned = r.clean.as_ref().map_or(0, |c| c.output_total);
    say(format_args!(
        "{} raw -> {cleaned} cleaned -> {} enriched tuples in {} partitions, {} station visits",
        r.clean.as_ref().map_or(0, |c| c.input_total),
        r.context_tuples,
        r.partitions,
        r.station_visits
    ));
    check_failed_jobs(r)
}

pub fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    match args.what {
        Generated::Loop => loop_trip_fixture().write(&args.out).map_err(at("generate")),
        Generated::Detour => detour_fixture().write(&args.out).map_err(at("generate")),
        Generated::Corpus => {
            let config = match &args.config {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(at("config"))?;
                    CorpusConfig::from_toml_str(&text).map_err(at("config"))?
                }
                None => CorpusConfig::default(),
            };
            let corpus = build_acceptance_corpus(&config).map_err(at("generate"))?;
            corpus.write(&args.out).map_err(at("generate"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workers_flag_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("engine.toml");
        fs::write(&path, "workers = 3\nstop_move_threshold_m = 12.5\n").unwrap();
        let c = engine_config(Some(&path), None).unwrap();
        assert_eq!((c.workers, c.stop_move_threshold_m), (3, 12.5));
        assert_eq!(engine_config(Some(&path), Some(8)).unwrap().workers, 8);
    }

    #[test]
    fn bad_config_is_a_config_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("engine.toml");
        fs::write(&path, "no_such_key = 1\n").unwrap();
        assert_eq!(engine_config(Some(&path), None).unwrap_err().stage, "config");
    }
}
