//! Append-only tuple stores with a secondary (trip key, timestamp) index.
//!
//! [`FileStore`] keeps one NDJSON record per tuple in `tuples.ndjson` and a
//! sidecar `index.ndjson` with the byte offset, timestamp and trip key of
//! every record. The index is rebuilt from the data file when the sidecar is
//! missing or shorter than the log.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::StoreError;
use crate::model::{RawTuple, Timestamp, TripKey, ATTRIBUTE_NAMES, ROUTE_ID_SLOT, TRIP_ID_SLOT};

pub const DATA_FILE: &str = "tuples.ndjson";
pub const INDEX_FILE: &str = "index.ndjson";

pub trait TupleStore {
    /// Appends a batch. Tuples whose `seq` is already stored are skipped, so a
    /// retried append never duplicates records.
    fn append(&mut self, batch: &[RawTuple]) -> Result<usize, StoreError>;

    /// Tuples with `from <= timestamp < to`, ascending by timestamp, ties in
    /// append order. Tuples without a readable timestamp never match.
    fn query_range(&self, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError>;

    /// Same as [`TupleStore::query_range`] restricted to one trip.
    fn query_trip(&self, key: &TripKey, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError>;

    /// Every stored tuple in append order.
    fn scan(&self) -> Result<Vec<RawTuple>, StoreError>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest and largest stored timestamps.
    fn time_span(&self) -> Option<(Timestamp, Timestamp)>;
}

/// Trip key as far as it can be read from raw text; `None` when a part is missing.
pub fn raw_trip_key(tuple: &RawTuple) -> Option<TripKey> {
    let ts = tuple.timestamp()?;
    let route = tuple.values[ROUTE_ID_SLOT].as_deref()?.trim();
    let trip = tuple.values[TRIP_ID_SLOT].as_deref()?.trim();
    TripKey::new(route, trip, ts.date()).ok()
}

#[derive(Debug, Default)]
struct Index {
    by_time: BTreeSet<(i64, usize)>,
    by_trip: HashMap<TripKey, BTreeSet<(i64, usize)>>,
    seqs: HashSet<u64>,
}

impl Index {
    fn insert(&mut self, pos: usize, seq: u64, ts: Option<i64>, key: Option<TripKey>) {
        self.seqs.insert(seq);
        if let Some(ts) = ts {
            self.by_time.insert((ts, pos));
            if let Some(key) = key {
                self.by_trip.entry(key).or_default().insert((ts, pos));
            }
        }
    }

    fn check_range(from: Timestamp, to: Timestamp) -> Result<(), StoreError> {
        if from > to {
            return Err(StoreError::InvalidRange { from: from.0, to: to.0 });
        }
        Ok(())
    }

    fn range(&self, from: Timestamp, to: Timestamp) -> Vec<usize> {
        self.by_time.range((from.0, 0)..(to.0, 0)).map(|&(_, pos)| pos).collect()
    }

    fn trip_range(&self, key: &TripKey, from: Timestamp, to: Timestamp) -> Vec<usize> {
        self.by_trip
            .get(key)
            .map(|set| set.range((from.0, 0)..(to.0, 0)).map(|&(_, pos)| pos).collect())
            .unwrap_or_default()
    }

    fn span(&self) -> Option<(Timestamp, Timestamp)> {
        let first = self.by_time.first()?.0;
        let last = self.by_time.last()?.0;
        Some((Timestamp(first), Timestamp(last)))
    }
}

/// In-memory store, used by tests and by the pipeline when no directory is given.
#[derive(Debug, Default)]
pub struct MemoryStore {
    records: Vec<RawTuple>,
    index: Index,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl TupleStore for MemoryStore {
    fn append(&mut self, batch: &[RawTuple]) -> Result<usize, StoreError> {
        let mut written = 0;
        for tuple in batch {
            if self.index.seqs.contains(&tuple.seq) {
                continue;
            }
            let pos = self.records.len();
            self.index.insert(pos, tuple.seq, tuple.timestamp().map(|t| t.0), raw_trip_key(tuple));
            self.records.push(tuple.clone());
            written += 1;
        }
        Ok(written)
    }

    fn query_range(&self, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError> {
        Index::check_range(from, to)?;
        Ok(self.index.range(from, to).into_iter().map(|p| self.records[p].clone()).collect())
    }

    fn query_trip(&self, key: &TripKey, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError> {
        Index::check_range(from, to)?;
        Ok(self.index.trip_range(key, from, to).into_iter().map(|p| self.records[p].clone()).collect())
    }

    fn scan(&self) -> Result<Vec<RawTuple>, StoreError> {
        Ok(self.records.clone())
    }

    fn len(&self) -> usize {
        self.records.len()
    }

    fn time_span(&self) -> Option<(Timestamp, Timestamp)> {
        self.index.span()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredRecord {
    seq: u64,
    late: bool,
    tuple: serde_json::Map<String, Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRecord {
    seq: u64,
    offset: u64,
    len: u64,
    ts: Option<i64>,
    key: Option<TripKey>,
}

fn to_record(tuple: &RawTuple) -> StoredRecord {
    let mut map = serde_json::Map::new();
    for (slot, name) in ATTRIBUTE_NAMES.iter().enumerate() {
        if let Some(v) = &tuple.values[slot] {
            map.insert((*name).to_string(), Value::String(v.clone()));
        }
    }
    for (k, v) in &tuple.extra {
        map.insert(k.clone(), Value::String(v.clone()));
    }
    StoredRecord { seq: tuple.seq, late: tuple.late, tuple: map }
}

fn from_record(record: StoredRecord) -> RawTuple {
    let mut tuple = RawTuple::from_json_object(record.seq, &record.tuple);
    tuple.late = record.late;
    tuple
}

/// Directory-backed store; a single writer, any number of readers.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    entries: Vec<(u64, u64)>,
    index: Index,
    data_len: u64,
}

impl FileStore {
    /// Opens (or creates) the store in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        let mut store = FileStore { dir, entries: Vec::new(), index: Index::default(), data_len: 0 };
        store.load()?;
        Ok(store)
    }

    /// Opens an existing store without creating it.
    pub fn open_existing(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let data = dir.join(DATA_FILE);
        if !data.is_file() {
            return Err(StoreError::Io {
                path: data,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no tuple store here"),
            });
        }
        Self::open(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
        move |source| StoreError::Io { path: path.to_path_buf(), source }
    }

    fn load(&mut self) -> Result<(), StoreError> {
        let data_path = self.dir.join(DATA_FILE);
        let index_path = self.dir.join(INDEX_FILE);
        if !data_path.exists() {
            File::create(&data_path).map_err(Self::io_err(&data_path))?;
            File::create(&index_path).map_err(Self::io_err(&index_path))?;
            return Ok(());
        }
        self.data_len = std::fs::metadata(&data_path).map_err(Self::io_err(&data_path))?.len();

        let mut indexed_to = 0u64;
        if let Ok(file) = File::open(&index_path) {
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(Self::io_err(&index_path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: IndexRecord = serde_json::from_str(&line)
                    .map_err(|e| StoreError::Corrupt { line: n + 1, reason: format!("index: {e}") })?;
                if rec.offset + rec.len > self.data_len {
                    break;
                }
                let pos = self.entries.len();
                self.entries.push((rec.offset, rec.len));
                self.index.insert(pos, rec.seq, rec.ts, rec.key);
                indexed_to = rec.offset + rec.len;
            }
        }
        if indexed_to < self.data_len {
            self.reindex_from(indexed_to)?;
        }
        Ok(())
    }

    /// Indexes records written to the data file but missing from the sidecar.
    fn reindex_from(&mut self, offset: u64) -> Result<(), StoreError> {
        let data_path = self.dir.join(DATA_FILE);
        let index_path = self.dir.join(INDEX_FILE);
        let mut file = File::open(&data_path).map_err(Self::io_err(&data_path))?;
        file.seek(SeekFrom::Start(offset)).map_err(Self::io_err(&data_path))?;
        let mut reader = BufReader::new(file);
        let mut index_out = BufWriter::new(
            OpenOptions::new().append(true).create(true).open(&index_path).map_err(Self::io_err(&index_path))?,
        );
        let mut pos = offset;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(Self::io_err(&data_path))? as u64;
            if n == 0 || !line.ends_with('\n') {
                break;
            }
            let record: StoredRecord = serde_json::from_str(line.trim_end())
                .map_err(|e| StoreError::Corrupt { line: self.entries.len() + 1, reason: e.to_string() })?;
            let tuple = from_record(record);
            self.push_index(&mut index_out, &tuple, pos, n)?;
            pos += n;
        }
        index_out.flush().map_err(Self::io_err(&index_path))?;
        Ok(())
    }

    fn push_index(&mut self, out: &mut impl Write, tuple: &RawTuple, offset: u64, len: u64) -> Result<(), StoreError> {
        let rec =
            IndexRecord { seq: tuple.seq, offset, len, ts: tuple.timestamp().map(|t| t.0), key: raw_trip_key(tuple) };
        let index_path = self.dir.join(INDEX_FILE);
        serde_json::to_writer(&mut *out, &rec)
            .map_err(|e| StoreError::Io { path: index_path.clone(), source: e.into() })?;
        out.write_all(b"\n").map_err(Self::io_err(&index_path))?;
        let pos = self.entries.len();
        self.entries.push((offset, len));
        self.index.insert(pos, rec.seq, rec.ts, rec.key);
        Ok(())
    }

    fn read_positions(&self, positions: &[usize]) -> Result<Vec<RawTuple>, StoreError> {
        let data_path = self.dir.join(DATA_FILE);
        let mut file = File::open(&data_path).map_err(Self::io_err(&data_path))?;
        let mut out = Vec::with_capacity(positions.len());
        let mut buf = Vec::new();
        for &pos in positions {
            let (offset, len) = self.entries[pos];
            buf.resize(len as usize, 0);
            file.seek(SeekFrom::Start(offset)).map_err(Self::io_err(&data_path))?;
            file.read_exact(&mut buf).map_err(Self::io_err(&data_path))?;
            let record: StoredRecord = serde_json::from_slice(&buf)
                .map_err(|e| StoreError::Corrupt { line: pos + 1, reason: e.to_string() })?;
            out.push(from_record(record));
        }
        Ok(out)
    }
}

impl TupleStore for FileStore {
    fn append(&mut self, batch: &[RawTuple]) -> Result<usize, StoreError> {
        let data_path = self.dir.join(DATA_FILE);
        let index_path = self.dir.join(INDEX_FILE);
        let mut data =
            BufWriter::new(OpenOptions::new().append(true).open(&data_path).map_err(Self::io_err(&data_path))?);
        let mut encoded = Vec::new();
        let mut pending = Vec::new();
        let mut batch_seqs = HashSet::new();
        for tuple in batch {
            if self.index.seqs.contains(&tuple.seq) || !batch_seqs.insert(tuple.seq) {
                continue;
            }
            encoded.clear();
            serde_json::to_writer(&mut encoded, &to_record(tuple))
                .map_err(|e| StoreError::Io { path: data_path.clone(), source: e.into() })?;
            encoded.push(b'\n');
            data.write_all(&encoded).map_err(Self::io_err(&data_path))?;
            pending.push((tuple, encoded.len() as u64));
        }
        data.flush().map_err(Self::io_err(&data_path))?;
        drop(data);

        // The index is written after the data so readers only ever see
        // complete records.
        let mut index_out =
            BufWriter::new(OpenOptions::new().append(true).open(&index_path).map_err(Self::io_err(&index_path))?);
        let written = pending.len();
        for (tuple, len) in pending {
            let offset = self.data_len;
            self.push_index(&mut index_out, tuple, offset, len)?;
            self.data_len += len;
        }
        index_out.flush().map_err(Self::io_err(&index_path))?;
        Ok(written)
    }

    fn query_range(&self, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError> {
        Index::check_range(from, to)?;
        self.read_positions(&self.index.range(from, to))
    }

    fn query_trip(&self, key: &TripKey, from: Timestamp, to: Timestamp) -> Result<Vec<RawTuple>, StoreError> {
        Index::check_range(from, to)?;
        self.read_positions(&self.index.trip_range(key, from, to))
    }

    fn scan(&self) -> Result<Vec<RawTuple>, StoreError> {
        let data_path = self.dir.join(DATA_FILE);
        let file = File::open(&data_path).map_err(Self::io_err(&data_path))?;
        let mut reader = BufReader::new(file).take(self.data_len);
        let mut out = Vec::with_capacity(self.entries.len());
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line).map_err(Self::io_err(&data_path))? == 0 {
                break;
            }
            let record: StoredRecord = serde_json::from_str(line.trim_end())
                .map_err(|e| StoreError::Corrupt { line: out.len() + 1, reason: e.to_string() })?;
            out.push(from_record(record));
        }
        Ok(out)
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn time_span(&self) -> Option<(Timestamp, Timestamp)> {
        self.index.span()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(seq: u64, ts: i64, trip: &str) -> RawTuple {
        let mut t = RawTuple { seq, ..Default::default() };
        t.set("route_id_rta", Some("51".into()));
        t.set("trip_id_tta", Some(trip.into()));
        t.set("lat", Some("46.1".into()));
        t.set("lng", Some("-64.8".into()));
        t.set("timestamp", Some(ts.to_string()));
        t
    }

    fn exercise(store: &mut dyn TupleStore) {
        let batch = vec![tuple(0, 100, "a"), tuple(1, 95, "b"), tuple(2, 100, "b"), tuple(3, 110, "a")];
        assert_eq!(store.append(&batch).unwrap(), 4);
        // retried append is absorbed
        assert_eq!(store.append(&batch[1..2]).unwrap(), 0);
        assert_eq!(store.len(), 4);

        assert!(store.query_range(Timestamp(10), Timestamp(10)).unwrap().is_empty());
        let all = store.query_range(Timestamp(0), Timestamp(1000)).unwrap();
        assert_eq!(all.iter().map(|t| t.seq).collect::<Vec<_>>(), vec![1, 0, 2, 3]);
        // half-open: the tuple at exactly `to` is excluded
        let upto = store.query_range(Timestamp(95), Timestamp(110)).unwrap();
        assert_eq!(upto.iter().map(|t| t.seq).collect::<Vec<_>>(), vec![1, 0, 2]);
        assert!(matches!(store.query_range(Timestamp(5), Timestamp(4)), Err(StoreError::InvalidRange { .. })));

        let key = raw_trip_key(&batch[0]).unwrap();
        let a = store.query_trip(&key, Timestamp(0), Timestamp(1000)).unwrap();
        assert_eq!(a.iter().map(|t| t.seq).collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(store.scan().unwrap(), batch);
        assert_eq!(store.time_span(), Some((Timestamp(95), Timestamp(110))));
    }

    #[test]
    fn memory_store_contract() {
        exercise(&mut MemoryStore::new());
    }

    #[test]
    fn file_store_contract_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = FileStore::open(dir.path()).unwrap();
            exercise(&mut store);
        }
        let store = FileStore::open(dir.path()).unwrap();
        assert_eq!(store.len(), 4);
        let all = store.query_range(Timestamp(0), Timestamp(1000)).unwrap();
        assert_eq!(all.iter().map(|t| t.seq).collect::<Vec<_>>(), vec![1, 0, 2, 3]);
    }

    #[test]
    fn file_store_rebuilds_lost_index() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = tuple(0, 100, "a");
        raw.late = true;
        raw.set("speed", Some("12".into()));
        raw.set("bdescription", Some(String::new()));
        {
            let mut store = FileStore::open(dir.path()).unwrap();
            store.append(&[raw.clone(), tuple(1, 90, "a")]).unwrap();
        }
        std::fs::write(dir.path().join(INDEX_FILE), "").unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        assert_eq!(store.len(), 2);
        let got = store.query_range(Timestamp(0), Timestamp(200)).unwrap();
        assert_eq!(got[1], raw);
    }

    #[test]
    fn tuples_without_timestamp_are_stored_but_not_ranged() {
        let mut store = MemoryStore::new();
        let mut t = tuple(0, 100, "a");
        t.set("timestamp", None);
        store.append(&[t]).unwrap();
        assert_eq!(store.len(), 1);
        assert!(store.query_range(Timestamp(i64::MIN), Timestamp(i64::MAX)).unwrap().is_empty());
        assert_eq!(store.scan().unwrap().len(), 1);
    }
}
