//! NDJSON and JSON file helpers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::model::{CleanTuple, RawTuple};

fn invalid(path: &Path, line: usize, reason: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {reason}", path.display()))
}

/// Appends one JSON line per item to `out`.
pub fn write_ndjson_to<T: Serialize, W: Write>(out: &mut W, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, &item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_ndjson<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_ndjson_to(&mut out, items)?;
    out.flush()
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}

fn for_each_object(
    path: &Path,
    mut f: impl FnMut(usize, serde_json::Map<String, Value>) -> io::Result<()>,
) -> io::Result<()> {
    let reader = BufReader::new(File::open(path)?);
    let mut index = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => f(index, obj)?,
            Ok(_) => return Err(invalid(path, n + 1, "not a JSON object")),
            Err(e) => return Err(invalid(path, n + 1, e)),
        }
        index += 1;
    }
    Ok(())
}

/// Raw tuples with `seq` set to the record index.
pub fn read_raw_ndjson(path: &Path) -> io::Result<Vec<RawTuple>> {
    let mut out = Vec::new();
    for_each_object(path, |i, obj| {
        out.push(RawTuple::from_json_object(i as u64, &obj));
        Ok(())
    })?;
    Ok(out)
}

/// Cleaned tuples with `seq` set to the record index.
pub fn read_clean_ndjson(path: &Path) -> io::Result<Vec<CleanTuple>> {
    let mut out = Vec::new();
    for_each_object(path, |i, obj| {
        let tuple = CleanTuple::from_json_object(i as u64, &obj).map_err(|e| invalid(path, i + 1, e))?;
        out.push(tuple);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_json_lines(path: &Path) -> io::Result<Vec<Value>> {
    let mut out = Vec::new();
    for_each_object(path, |_, obj| {
        out.push(Value::Object(obj));
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip_and_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.ndjson");
        let mut t = RawTuple::default();
        t.set("vlr_id", Some("1".into()));
        t.set("lat", Some("46.1".into()));
        write_ndjson(&path, [t.to_json_object(), t.to_json_object()]).unwrap();
        let back = read_raw_ndjson(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].seq, 1);
        assert_eq!(back[0].get("lat"), Some("46.1"));

        std::fs::write(&path, "{}\nnope\n").unwrap();
        let err = read_raw_ndjson(&path).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidData);
        assert!(err.to_string().contains(":2:"));
    }
}
