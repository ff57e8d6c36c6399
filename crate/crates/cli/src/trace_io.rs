//! Trace CSV, version 1: a `# rowstoch-trace v1` line, then a header row
//! `k,residual2,consensus_err,opt_err,grad_track_err,grad_norm` and one row per
//! record. Floats use the shortest representation that round-trips.

use std::io::Write;
use std::path::{Path, PathBuf};

use rowstoch_core::TraceRecord;

use crate::error::{io_context, CliError, Result};

pub const VERSION_LINE: &str = "# rowstoch-trace v1";
pub const COLUMNS: [&str; 6] = ["k", "residual2", "consensus_err", "opt_err", "grad_track_err", "grad_norm"];

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut out = Vec::new();
    writeln!(out, "{VERSION_LINE}").unwrap();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in records {
            w.serialize(r).expect("in-memory write");
        }
        if records.is_empty() {
            w.write_record(COLUMNS).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

pub fn parse_trace(text: &str, origin: &Path) -> Result<Vec<TraceRecord>> {
    let malformed = |reason: String| CliError::MalformedTrace { path: origin.to_path_buf(), reason };
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("").trim_end_matches('\r');
    if first != VERSION_LINE {
        return Err(malformed(format!("expected {VERSION_LINE:?} on the first line")));
    }
    let body = lines.next().unwrap_or("");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(malformed(format!("unexpected columns {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for row in reader.deserialize() {
        let record: TraceRecord = row.map_err(|e| malformed(e.to_string()))?;
        if let Some(prev) = records.last() {
            if record.k <= prev.k {
                return Err(malformed(format!("k not increasing at {}", record.k)));
            }
        }
        records.push(record);
    }
    if records.is_empty() {
        return Err(malformed("no records".into()));
    }
    Ok(records)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_context(format!("reading {}", path.display())))?;
    parse_trace(&text, path)
}

/// Writes `contents` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io_context(format!("creating {}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_context("creating temporary file"))?;
    tmp.write_all(contents).map_err(io_context("writing temporary file"))?;
    tmp.persist(path).map_err(|e| CliError::Io { context: format!("writing {}", path.display()), source: e.error })?;
    Ok(())
}

pub fn write_trace(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    write_atomic(path, trace_to_string(records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TraceRecord> {
        (0..5)
            .map(|k| TraceRecord {
                k,
                residual2: 0.1f64.powi(k as i32) / 3.0,
                consensus_err: 1e-300 * k as f64,
                opt_err: std::f64::consts::PI,
                grad_track_err: 0.0,
                grad_norm: f64::MAX,
            })
            .collect()
    }

    #[test]
    fn round_trip_is_exact() {
        let records = sample();
        let text = trace_to_string(&records);
        assert!(text.starts_with("# rowstoch-trace v1\nk,residual2,consensus_err,opt_err,grad_track_err,grad_norm\n"));
        assert_eq!(parse_trace(&text, Path::new("mem")).unwrap(), records);
        assert_eq!(trace_to_string(&parse_trace(&text, Path::new("mem")).unwrap()), text);
    }

    #[test]
    fn rejects_malformed_input() {
        let path = Path::new("mem");
        for bad in [
            "",
            "# rowstoch-trace v1\n",
            "# rowstoch-trace v1\nk,residual2,consensus_err,opt_err,grad_track_err,grad_norm\n",
            "k,residual2\n1,2\n",
            "# rowstoch-trace v2\nk,residual2,consensus_err,opt_err,grad_track_err,grad_norm\n0,1,1,1,1,1\n",
            "# rowstoch-trace v1\nk,residual2,consensus_err,opt_err,grad_track_err,grad_norm\n0,x,1,1,1,1\n",
            "# rowstoch-trace v1\nk,residual2,consensus_err,opt_err,grad_track_err,grad_norm\n1,1,1,1,1,1\n1,1,1,1,1,1\n",
        ] {
            assert!(matches!(parse_trace(bad, path), Err(CliError::MalformedTrace { .. })), "{bad:?}");
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("t.csv");
        write_trace(&path, &sample()).unwrap();
        write_trace(&path, &sample()[..2]).unwrap();
        assert_eq!(read_trace(&path).unwrap().len(), 2);
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
