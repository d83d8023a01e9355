//! Stream sources: replayed NDJSON/CSV files and in-memory generator output.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::Value;

use crate::error::SourceError;
use crate::model::{attribute_slot, RawTuple};

/// Reads one tuple at a time. A [`SourceError::Transient`] leaves the reader
/// where it was, so the same read can be retried.
pub trait TupleReader: Send {
    fn read_next(&mut self) -> Result<Option<RawTuple>, SourceError>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    ReplayFile(PathBuf),
    SyntheticGenerator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServingRate {
    /// Emit as fast as the consumer reads (historic data).
    MaxSpeed,
    /// Pace emission by event time, `speedup` times faster than wall clock.
    RealTime { speedup: f64 },
}

pub struct StreamSource {
    kind: SourceKind,
    reader: Box<dyn TupleReader>,
    cursor: u64,
    rate: ServingRate,
    pacing_anchor: Option<(i64, Instant)>,
}

impl StreamSource {
    pub fn new(kind: SourceKind, reader: Box<dyn TupleReader>, rate: ServingRate) -> Self {
        StreamSource { kind, reader, cursor: 0, rate, pacing_anchor: None }
    }

    /// Replays an NDJSON file, or CSV when the extension is `.csv`.
    pub fn replay_file(path: impl AsRef<Path>, rate: ServingRate) -> Result<Self, SourceError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| SourceError::Open { path: path.clone(), source })?;
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let reader: Box<dyn TupleReader> = if is_csv {
            Box::new(CsvReader::new(file).map_err(|reason| SourceError::Malformed { line: 1, reason })?)
        } else {
            Box::new(NdjsonReader::new(BufReader::new(file)))
        };
        Ok(Self::new(SourceKind::ReplayFile(path), reader, rate))
    }

    pub fn from_tuples(tuples: Vec<RawTuple>, rate: ServingRate) -> Self {
        Self::new(SourceKind::SyntheticGenerator, Box::new(VecReader::new(tuples)), rate)
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    /// Number of tuples emitted so far.
    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn next_tuple(&mut self) -> Result<Option<RawTuple>, SourceError> {
        let tuple = self.reader.read_next()?;
        if let Some(t) = &tuple {
            self.cursor += 1;
            if let ServingRate::RealTime { speedup } = self.rate {
                self.pace(t, speedup);
            }
        }
        Ok(tuple)
    }

    fn pace(&mut self, tuple: &RawTuple, speedup: f64) {
        let Some(ts) = tuple.timestamp() else { return };
        let (first_ts, started) = *self.pacing_anchor.get_or_insert((ts.0, Instant::now()));
        let offset = (ts.0 - first_ts) as f64 / speedup.max(1e-9);
        if offset > 0.0 {
            let due = started + Duration::from_secs_f64(offset);
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
    }
}

pub struct VecReader {
    tuples: std::vec::IntoIter<RawTuple>,
}

impl VecReader {
    pub fn new(tuples: Vec<RawTuple>) -> Self {
        VecReader { tuples: tuples.into_iter() }
    }
}

impl TupleReader for VecReader {
    fn read_next(&mut self) -> Result<Option<RawTuple>, SourceError> {
        Ok(self.tuples.next())
    }
}

/// One JSON object per line; blank lines are skipped.
pub struct NdjsonReader<R> {
    inner: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead + Send> NdjsonReader<R> {
    pub fn new(inner: R) -> Self {
        NdjsonReader { inner, line_no: 0, buf: String::new() }
    }
}

impl<R: BufRead + Send> TupleReader for NdjsonReader<R> {
    fn read_next(&mut self) -> Result<Option<RawTuple>, SourceError> {
        loop {
            self.buf.clear();
            let n = self.inner.read_line(&mut self.buf).map_err(|e| SourceError::Transient(e.to_string()))?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            return match serde_json::from_str::<Value>(line) {
                Ok(Value::Object(obj)) => Ok(Some(RawTuple::from_json_object(0, &obj))),
                Ok(_) => Err(SourceError::Malformed { line: self.line_no, reason: "not a JSON object".into() }),
                Err(e) => Err(SourceError::Malformed { line: self.line_no, reason: e.to_string() }),
            };
        }
    }
}

/// CSV with a header row of attribute names. Empty cells are absent values.
pub struct CsvReader {
    reader: csv::Reader<File>,
    headers: Vec<String>,
    record: csv::StringRecord,
}

impl CsvReader {
    pub fn new(file: File) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
        let headers = reader.headers().map_err(|e| e.to_string())?.iter().map(|h| h.trim().to_string()).collect();
        Ok(CsvReader { reader, headers, record: csv::StringRecord::new() })
    }
}

impl TupleReader for CsvReader {
    fn read_next(&mut self) -> Result<Option<RawTuple>, SourceError> {
        let more = self.reader.read_record(&mut self.record).map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            SourceError::Malformed { line, reason: e.to_string() }
        })?;
        if !more {
            return Ok(None);
        }
        let mut tuple = RawTuple::default();
        for (name, value) in self.headers.iter().zip(self.record.iter()) {
            if value.is_empty() {
                continue;
            }
            match attribute_slot(name) {
                Some(slot) => tuple.values[slot] = Some(value.to_string()),
                None => tuple.extra.push((name.clone(), value.to_string())),
            }
        }
        tuple.extra.sort();
        Ok(Some(tuple))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn ndjson_reports_malformed_lines_and_continues() {
        let text = "{\"vlr_id\":\"1\",\"timestamp\":10}\n\nnot json\n[1]\n{\"vlr_id\":\"2\"}\n";
        let mut r = NdjsonReader::new(text.as_bytes());
        assert_eq!(r.read_next().unwrap().unwrap().get("vlr_id"), Some("1"));
        assert!(matches!(r.read_next(), Err(SourceError::Malformed { line: 3, .. })));
        assert!(matches!(r.read_next(), Err(SourceError::Malformed { line: 4, .. })));
        assert_eq!(r.read_next().unwrap().unwrap().get("vlr_id"), Some("2"));
        assert!(r.read_next().unwrap().is_none());
    }

    #[test]
    fn csv_header_maps_attributes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feed.csv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "vlr_id,route_id_rta,lat,lng,timestamp,odometer").unwrap();
        writeln!(f, "1,51,46.1,-64.8,2016-06-15T12:00:00Z,99").unwrap();
        writeln!(f, "2,51,,-64.8,1465992005,").unwrap();
        drop(f);
        let mut src = StreamSource::replay_file(&path, ServingRate::MaxSpeed).unwrap();
        let a = src.next_tuple().unwrap().unwrap();
        assert_eq!(a.get("odometer"), Some("99"));
        assert_eq!(a.timestamp().unwrap().0, 1465992000);
        let b = src.next_tuple().unwrap().unwrap();
        assert_eq!(b.get("lat"), None);
        assert!(src.next_tuple().unwrap().is_none());
        assert_eq!(src.cursor(), 2);
    }

    #[test]
    fn missing_file_is_an_open_error() {
        assert!(matches!(
            StreamSource::replay_file("/nonexistent/feed.ndjson", ServingRate::MaxSpeed),
            Err(SourceError::Open { .. })
        ));
    }
}
