//! Report artifacts: `report.json`, `confusion.csv`, `confusion.svg` and
//! the timing side-file `run_meta.json`.
//!
//! Everything except `run_meta.json` is a pure function of the config, so
//! repeated runs produce byte-identical files; wall time and the start
//! timestamp live only in the meta file.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use lqe_core::evaluate::ConfusionMatrix;
use lqe_core::featurize::LinkClass;

use crate::pipeline::FullReport;
use crate::svg;
use crate::CliError;

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, content).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// Renders the pooled confusion matrix as CSV: one row per predicted
/// class, columns per actual class.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("predicted,bad,intermediate,good\n");
    for predicted in LinkClass::ALL {
        out.push_str(predicted.as_str());
        for actual in LinkClass::ALL {
            out.push(',');
            out.push_str(&cm.count(predicted, actual).to_string());
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct RunMeta {
    wall_time_s: f64,
    started_unix_s: u64,
}

/// Writes the full artifact set of one run.
pub fn write_run_artifacts(
    out_dir: &Path,
    report: &FullReport,
    wall_time_s: f64,
) -> Result<(), CliError> {
    write_json(&out_dir.join("report.json"), report)?;
    write_json(&out_dir.join("config.json"), &report.config)?;
    write_file(&out_dir.join("confusion.csv"), &confusion_csv(&report.eval.pooled))?;
    write_file(
        &out_dir.join("confusion.svg"),
        &svg::confusion_heatmap(&report.eval.pooled),
    )?;
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(&out_dir.join("run_meta.json"), &RunMeta { wall_time_s, started_unix_s })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_csv_layout() {
        let mut cm = ConfusionMatrix::new();
        cm.record(LinkClass::Good, LinkClass::Good);
        cm.record(LinkClass::Good, LinkClass::Bad);
        cm.record(LinkClass::Bad, LinkClass::Bad);
        let text = confusion_csv(&cm);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "predicted,bad,intermediate,good");
        assert_eq!(lines[1], "bad,1,0,0");
        assert_eq!(lines[2], "intermediate,0,0,0");
        assert_eq!(lines[3], "good,1,0,1");
    }
}
