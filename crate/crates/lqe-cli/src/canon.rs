//! Canonical CSV interchange format for trace sets.
//!
//! Schema: header `noise_dbm,src,dst,seq,rssi`, one row per packet slot, an
//! empty `rssi` field for missing packets, UTF-8 with LF line endings. Rows
//! are grouped by trace in `(noise_dbm, src, dst)` write order with
//! sequence numbers ascending from 1; the reader enforces that canonical
//! arrangement. Only cleaned readings belong here, so `rssi` must be in
//! `[0, 127]` — the raw sentinel 128 is already mapped to missing by the
//! parser.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use lqe_core::trace::{LinkTrace, TraceSet};

use crate::dataset::DataError;

const HEADER: [&str; 5] = ["noise_dbm", "src", "dst", "seq", "rssi"];

/// Writes a trace set in canonical form.
pub fn write_canonical_csv(ts: &TraceSet, path: &Path) -> Result<(), DataError> {
    let io = |source| DataError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer
        .write_record(HEADER)
        .map_err(|e| DataError::Schema(e.to_string()))?;
    for trace in ts.traces() {
        for slot in trace.slots() {
            let rssi = slot.rssi().map(|v| v.to_string()).unwrap_or_default();
            writer
                .write_record([
                    trace.noise_dbm().to_string(),
                    trace.src().to_string(),
                    trace.dst().to_string(),
                    slot.seq().to_string(),
                    rssi,
                ])
                .map_err(|e| DataError::Schema(e.to_string()))?;
        }
    }
    writer.flush().map_err(io)?;
    Ok(())
}

struct PendingTrace {
    noise_dbm: i32,
    src: u32,
    dst: u32,
    readings: Vec<Option<u8>>,
}

impl PendingTrace {
    fn finish(self, ppt: &mut Option<usize>) -> Result<LinkTrace, DataError> {
        let expected = *ppt.get_or_insert(self.readings.len());
        if self.readings.len() != expected {
            return Err(DataError::Schema(format!(
                "trace ({}, {}, {}) has {} rows, expected {}",
                self.noise_dbm,
                self.src,
                self.dst,
                self.readings.len(),
                expected
            )));
        }
        LinkTrace::new(self.src, self.dst, self.noise_dbm, self.readings)
            .map_err(|e| DataError::Schema(e.to_string()))
    }
}

/// Reads a canonical CSV back into a trace set.
pub fn read_canonical_csv(path: &Path) -> Result<TraceSet, DataError> {
    let io = |source| DataError::Io { path: path.to_path_buf(), source };
    let file = File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| DataError::Schema(e.to_string()))?;
    if headers.iter().ne(HEADER) {
        return Err(DataError::Schema(format!(
            "header mismatch: expected {HEADER:?}, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }

    let mut traces = Vec::new();
    let mut ppt: Option<usize> = None;
    let mut pending: Option<PendingTrace> = None;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Schema(e.to_string()))?;
        let line = row_idx + 2;
        if record.len() != HEADER.len() {
            return Err(DataError::Schema(format!(
                "line {line}: expected {} fields, found {}",
                HEADER.len(),
                record.len()
            )));
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse_int = |i: usize, name: &str| -> Result<i64, DataError> {
            field(i)
                .parse()
                .map_err(|_| DataError::Schema(format!("line {line}: bad {name} {:?}", field(i))))
        };
        let noise_dbm = parse_int(0, "noise_dbm")? as i32;
        let src = parse_int(1, "src")? as u32;
        let dst = parse_int(2, "dst")? as u32;
        let seq = parse_int(3, "seq")?;
        let rssi = match field(4) {
            "" => None,
            text => {
                let value: i64 = text.parse().map_err(|_| {
                    DataError::Schema(format!("line {line}: bad rssi {text:?}"))
                })?;
                if !(0..=127).contains(&value) {
                    return Err(DataError::Schema(format!(
                        "line {line}: rssi {value} out of range [0, 127]"
                    )));
                }
                Some(value as u8)
            }
        };

        let same_trace = pending.as_ref().is_some_and(|p| {
            (p.noise_dbm, p.src, p.dst) == (noise_dbm, src, dst)
        });
        if !same_trace {
            if let Some(done) = pending.take() {
                traces.push(done.finish(&mut ppt)?);
            }
            pending = Some(PendingTrace { noise_dbm, src, dst, readings: Vec::new() });
        }
        let current = pending.as_mut().unwrap();
        if seq != current.readings.len() as i64 + 1 {
            return Err(DataError::Schema(format!(
                "line {line}: sequence number {seq} out of order (expected {})",
                current.readings.len() + 1
            )));
        }
        current.readings.push(rssi);
    }
    if let Some(done) = pending.take() {
        traces.push(done.finish(&mut ppt)?);
    }
    let ppt = ppt.ok_or_else(|| DataError::Schema("file contains no data rows".into()))?;
    TraceSet::new(traces, ppt).map_err(|e| DataError::Schema(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lqe_core::trace::LinkTrace;
    use proptest::prelude::*;
    use std::fs;

    fn fixture_set() -> TraceSet {
        let t1 = LinkTrace::new(
            1,
            2,
            0,
            (0..300)
                .map(|i| if i % 3 == 0 { None } else { Some((i % 128) as u8) })
                .collect(),
        )
        .unwrap();
        let t2 = LinkTrace::new(2, 1, -5, vec![None; 300]).unwrap();
        let t3 = LinkTrace::new(3, 4, -20, vec![Some(127); 300]).unwrap();
        TraceSet::new(vec![t1, t2, t3], 300).unwrap()
    }

    #[test]
    fn three_trace_fixture_round_trips_with_900_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.csv");
        let ts = fixture_set();
        write_canonical_csv(&ts, &path).unwrap();

        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 300, "header plus 3x300 data rows");
        assert!(text.starts_with("noise_dbm,src,dst,seq,rssi\n"));
        assert!(!text.contains('\r'), "LF line endings only");

        let back = read_canonical_csv(&path).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn header_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "noise,src,dst,seq,rssi\n0,1,2,1,40\n").unwrap();
        let err = read_canonical_csv(&path).unwrap_err();
        assert!(matches!(err, DataError::Schema(_)), "{err}");
    }

    #[test]
    fn out_of_range_rssi_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(
            &path,
            "noise_dbm,src,dst,seq,rssi\n0,1,2,1,200\n",
        )
        .unwrap();
        let err = read_canonical_csv(&path).unwrap_err();
        assert!(err.to_string().contains("rssi 200"), "{err}");
        // 128 is the raw invalid sentinel; canonical files store it as missing
        fs::write(
            &path,
            "noise_dbm,src,dst,seq,rssi\n0,1,2,1,128\n",
        )
        .unwrap();
        assert!(read_canonical_csv(&path).is_err());
    }

    #[test]
    fn disordered_sequence_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(
            &path,
            "noise_dbm,src,dst,seq,rssi\n0,1,2,2,40\n",
        )
        .unwrap();
        assert!(read_canonical_csv(&path).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // Round-trip identity on random trace sets.
        #[test]
        fn round_trip_identity(
            readings in proptest::collection::vec(
                proptest::collection::vec(proptest::option::of(0u8..=127), 20),
                1..5,
            )
        ) {
            let traces: Vec<LinkTrace> = readings
                .into_iter()
                .enumerate()
                .map(|(i, r)| LinkTrace::new(i as u32, (i + 1) as u32, 0, r).unwrap())
                .collect();
            let ts = TraceSet::new(traces, 20).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("roundtrip.csv");
            write_canonical_csv(&ts, &path).unwrap();
            let back = read_canonical_csv(&path).unwrap();
            prop_assert_eq!(back, ts);
        }
    }
}
