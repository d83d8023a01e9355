//! Tabular summaries of a run directory: cleaning counts, activity counts per
//! trip, phase timings and station visits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use transitflow::engine::{PhaseTiming, RunReport, VisitRecord, RUN_REPORT_FILE, TIMING_FILE, VISITS_FILE};
use transitflow::io::read_json_lines;

use crate::commands::{at, Failure};
use crate::{Format, ReportArgs};

const CLEANING: [&str; 11] = [
    "input_total",
    "output_total",
    "missing_tuples_detected",
    "trips_dropped_sparse",
    "tuples_in_dropped_trips",
    "duplicates_removed",
    "duplicate_conflicts",
    "attributes_set_na",
    "tuples_deleted",
    "redundant_attributes_stripped",
    "values_standardized",
];
const COUNTS: [&str; 8] = [
    "moves",
    "stops",
    "running",
    "passing",
    "stopover",
    "suspension_of_movement",
    "wrong_street_segment",
    "at_intersection",
];
const TIMING: [&str; 6] = ["clean_s", "map_s", "shuffle_s", "reduce_s", "partitions", "workers"];
const VISITS: [&str; 11] = [
    "route_id",
    "trip_id",
    "service_date",
    "station_id",
    "direction",
    "arrival",
    "departure",
    "dwell_s",
    "tuples",
    "first_index",
    "last_index",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn metrics(name: &'static str, source: &Value, keys: &[&str]) -> Self {
        let rows = keys.iter().map(|k| vec![json!(k), source[*k].clone()]).collect();
        Table { name, columns: vec!["metric".into(), "value".into()], rows }
    }

    fn records(name: &'static str, columns: Vec<String>, rows: Vec<Vec<Value>>) -> Self {
        Table { name, columns, rows }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure { stage: "report", message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| Failure { stage: "report", message: format!("{}: {e}", path.display()) })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Loads the run artifacts and lays them out as tables.
pub fn tables(run: &Path) -> Result<Vec<Table>, Failure> {
    let report: RunReport = read_json(&run.join(RUN_REPORT_FILE))?;
    let timing: PhaseTiming = read_json(&run.join(TIMING_FILE))?;
    let visits_path = run.join(VISITS_FILE);
    let visits: Vec<VisitRecord> = read_json_lines(&visits_path)
        .map_err(|e| Failure { stage: "report", message: format!("{}: {e}", visits_path.display()) })?
        .into_iter()
        .map(serde_json::from_value)
        .collect::<Result<_, _>>()
        .map_err(at("report"))?;

    let cleaning = match &report.clean {
        Some(c) => Table::metrics("cleaning", &to_value(c), &CLEANING),
        None => Table::records("cleaning", vec!["metric".into(), "value".into()], Vec::new()),
    };

    let mut totals = to_value(&report.totals);
    for (k, v) in [
        ("input_tuples", json!(report.input_tuples)),
        ("context_tuples", json!(report.context_tuples)),
        ("partitions", json!(report.partitions)),
        ("station_visits", json!(report.station_visits)),
        ("rejects", json!(report.rejects.len())),
        ("failed_jobs", json!(report.failed_jobs.len())),
        ("degenerate_trips", json!(report.degenerate_trips.len())),
    ] {
        totals[k] = v;
    }
    let total_keys: Vec<&str> = ["input_tuples", "context_tuples", "partitions", "station_visits"]
        .into_iter()
        .chain(COUNTS)
        .chain(["rejects", "failed_jobs", "degenerate_trips"])
        .collect();

    let mut activity_cols = vec!["trip".to_string(), "tuples".to_string()];
    activity_cols.extend(COUNTS.iter().map(|c| c.to_string()));
    activity_cols.push("station_visits".into());
    let activity_rows = report
        .trips
        .iter()
        .map(|t| {
            let counts = to_value(&t.counts);
            let mut row = vec![json!(t.key), json!(t.tuples)];
            row.extend(COUNTS.iter().map(|c| counts[*c].clone()));
            row.push(json!(t.station_visits));
            row
        })
        .collect();

    let visit_rows = visits
        .iter()
        .map(|v| {
            let v = to_value(v);
            VISITS.iter().map(|c| v[*c].clone()).collect()
        })
        .collect();

    Ok(vec![
        Table::metrics("status", &json!({ "status": report.status, "error": report.error }), &["status", "error"]),
        cleaning,
        Table::metrics("totals", &totals, &total_keys),
        Table::records("activity", activity_cols, activity_rows),
        Table::metrics("timing", &to_value(&timing), &TIMING),
        Table::records("station_visits", VISITS.iter().map(|c| c.to_string()).collect(), visit_rows),
    ])
}

pub fn to_json(tables: &[Table]) -> Value {
    Value::Object(
        tables.iter().map(|t| (t.name.to_string(), json!({ "columns": t.columns, "rows": t.rows }))).collect(),
    )
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Long form: one record per table cell.
pub fn to_csv(tables: &[Table]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["section", "row", "column", "value"]).map_err(at("report"))?;
    for t in tables {
        for (i, row) in t.rows.iter().enumerate() {
            for (col, v) in t.columns.iter().zip(row) {
                w.write_record([t.name, &i.to_string(), col, &cell(v)]).map_err(at("report"))?;
            }
        }
    }
    w.into_inner().map_err(at("report"))
}

pub fn to_markdown(tables: &[Table]) -> String {
    let mut out = String::new();
    for t in tables {
        let _ = writeln!(out, "## {}\n", t.name);
        let _ = writeln!(out, "| {} |", t.columns.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(t.columns.len()));
        for row in &t.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out.push('\n');
    }
    out
}

pub fn emit(args: &ReportArgs) -> Result<(), Failure> {
    let tables = tables(&args.run)?;
    let bytes = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(&tables)).expect("serializable");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => to_csv(&tables)?,
        Format::Md => to_markdown(&tables).into_bytes(),
    };
    match std::io::stdout().write_all(&bytes) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(at("report")(e)),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Table> {
        vec![
            Table::metrics("totals", &json!({ "running": 200, "passing": 30 }), &["running", "passing"]),
            Table::records(
                "station_visits",
                vec!["station_id".into(), "dwell_s".into()],
                vec![vec![json!("P01"), json!(10)]],
            ),
        ]
    }

    #[test]
    fn markdown_has_one_table_per_section() {
        let md = to_markdown(&sample());
        assert!(md.contains("## totals\n\n| metric | value |\n|---|---|\n| running | 200 |\n| passing | 30 |"));
        assert!(md.contains("| P01 | 10 |"));
    }

    #[test]
    fn csv_is_long_form() {
        let text = String::from_utf8(to_csv(&sample()).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "section,row,column,value");
        assert_eq!(lines[1], "totals,0,metric,running");
        assert_eq!(lines[2], "totals,0,value,200");
        assert_eq!(lines.last().unwrap(), &"station_visits,0,dwell_s,10");
    }

    #[test]
    fn json_keeps_column_order() {
        let v = to_json(&sample());
        assert_eq!(v["station_visits"]["columns"], json!(["station_id", "dwell_s"]));
        assert_eq!(v["totals"]["rows"][1], json!(["passing", 30]));
    }
}
