//! Loader for the raw trace directory layout.
//!
//! The on-disk contract is `<root>/dbm<level>/src<id>_dst<id>.txt`, one
//! file per link trace, with whitespace-separated `<seq> <rssi>` lines.
//! Traces load in lexicographic `(noise_dbm, src, dst)` order regardless of
//! directory iteration order; files parse in parallel.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use lqe_core::trace::{parse_rutgers_trace, TraceError, TraceSet};

/// Errors from the directory loader and the canonical CSV reader.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: TraceError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("schema error: {0}")]
    Schema(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

/// Parses `dbm<level>` directory names.
fn parse_level_dir(name: &str) -> Option<i32> {
    name.strip_prefix("dbm")?.parse().ok()
}

/// Parses `src<id>_dst<id>.txt` file names.
fn parse_trace_name(name: &str) -> Option<(u32, u32)> {
    let stem = name.strip_suffix(".txt")?;
    let (src_part, dst_part) = stem.split_once('_')?;
    let src = src_part.strip_prefix("src")?.parse().ok()?;
    let dst = dst_part.strip_prefix("dst")?.parse().ok()?;
    Some((src, dst))
}

/// Loads every trace under `root`, aborting on unexpected entries,
/// unreadable files or parse errors.
pub fn load_trace_set(root: &Path, packets_per_trace: usize) -> Result<TraceSet, DataError> {
    if !root.is_dir() {
        return Err(DataError::Layout(format!("{} is not a directory", root.display())));
    }
    let mut files: Vec<(i32, u32, u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let level = parse_level_dir(&name).ok_or_else(|| {
            DataError::Layout(format!(
                "unexpected entry {:?} (expected dbm<level> directories)",
                entry.path()
            ))
        })?;
        if !entry.path().is_dir() {
            return Err(DataError::Layout(format!("{:?} is not a directory", entry.path())));
        }
        for file in fs::read_dir(entry.path()).map_err(io_err(&entry.path()))? {
            let file = file.map_err(io_err(&entry.path()))?;
            let file_name = file.file_name().to_string_lossy().into_owned();
            let (src, dst) = parse_trace_name(&file_name).ok_or_else(|| {
                DataError::Layout(format!(
                    "unexpected entry {:?} (expected src<id>_dst<id>.txt)",
                    file.path()
                ))
            })?;
            files.push((level, src, dst, file.path()));
        }
    }
    if files.is_empty() {
        return Err(DataError::Layout(format!(
            "no trace files under {}",
            root.display()
        )));
    }
    files.sort_by_key(|(level, src, dst, _)| (*level, *src, *dst));

    let traces = files
        .par_iter()
        .map(|(level, src, dst, path)| {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            parse_rutgers_trace(&text, *src, *dst, *level, packets_per_trace)
                .map_err(|source| DataError::Parse { path: path.clone(), source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    TraceSet::new(traces, packets_per_trace)
        .map_err(|e| DataError::Schema(e.to_string()))
}
