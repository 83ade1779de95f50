//! Post-run summary built from `config.snapshot.json` and `log.csv` alone.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::log::{header, read_log, LogRow};
use super::run::RunFiles;
use crate::config::{load_config, ConfigError};
use crate::objective::{Direction, ObjectiveVector};

/// Evaluations per point of the best-so-far series.
pub const SERIES_BUCKET: u64 = 100;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no log at {0}")]
    MissingLog(PathBuf),
    #[error("log {0} has no evaluations")]
    EmptyLog(PathBuf),
    #[error("log line {line}: {message}")]
    BadLog { line: usize, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub evals: u64,
    /// `None` until the first valid evaluation.
    pub best: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub genome_id: String,
    pub eval_index: u64,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub evals: u64,
    pub valid_evals: u64,
    pub directions: Vec<Direction>,
    pub best_objectives: Option<Vec<f64>>,
    pub best_genome_id: Option<String>,
    pub series: Vec<SeriesPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub front_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub front: Option<Vec<FrontEntry>>,
}

pub fn build_report(out_dir: &Path) -> Result<Report, ReportError> {
    let files = RunFiles::new(out_dir);
    let log_path = files.log();
    if !log_path.is_file() {
        return Err(ReportError::MissingLog(log_path));
    }
    let config = load_config(&files.config_snapshot())?;
    let directions = config.directions();
    let (head, rows) = read_log(&log_path).map_err(|e| ReportError::BadLog {
        line: 0,
        message: e.to_string(),
    })?;
    if head != header(directions.len()) {
        return Err(ReportError::BadLog {
            line: 1,
            message: format!("unexpected header `{head}`"),
        });
    }
    let rows: Vec<LogRow> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|message| ReportError::BadLog {
                line: i + 2,
                message,
            })
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(ReportError::EmptyLog(log_path));
    }
    Ok(summarize(&rows, &directions))
}

/// Builds the report and writes it to `report.json`.
pub fn write_report(out_dir: &Path) -> Result<Report, ReportError> {
    let report = build_report(out_dir)?;
    let path = RunFiles::new(out_dir).report();
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    std::fs::write(&path, text + "\n").map_err(|e| ReportError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    Ok(report)
}

fn objective(row: &LogRow, directions: &[Direction]) -> Option<ObjectiveVector> {
    if !row.valid {
        return None;
    }
    ObjectiveVector::new(row.objectives.clone(), directions.to_vec()).ok()
}

pub fn summarize(rows: &[LogRow], directions: &[Direction]) -> Report {
    let mut best: Option<(ObjectiveVector, &LogRow)> = None;
    let mut series = Vec::new();
    let mut front: Vec<(ObjectiveVector, &LogRow)> = Vec::new();
    let mut valid = 0;
    for (i, row) in rows.iter().enumerate() {
        if let Some(o) = objective(row, directions) {
            valid += 1;
            if best
                .as_ref()
                .is_none_or(|(b, _)| o.compare_lex(b) == Ordering::Less)
            {
                best = Some((o.clone(), row));
            }
            if directions.len() > 1 {
                let blocked = front
                    .iter()
                    .any(|(f, _)| f.dominates(&o) || f.values() == o.values());
                if !blocked {
                    front.retain(|(f, _)| !o.dominates(f));
                    front.push((o, row));
                }
            }
        }
        let last = i + 1 == rows.len();
        if row.eval_index % SERIES_BUCKET == 0 || last {
            series.push(SeriesPoint {
                evals: row.eval_index,
                best: best.as_ref().map(|(b, _)| b.values().to_vec()),
            });
        }
    }
    let multi = directions.len() > 1;
    Report {
        evals: rows.last().map_or(0, |r| r.eval_index),
        valid_evals: valid,
        directions: directions.to_vec(),
        best_objectives: best.as_ref().map(|(b, _)| b.values().to_vec()),
        best_genome_id: best.as_ref().map(|(_, r)| format!("{:016x}", r.genome_id)),
        series,
        front_size: multi.then_some(front.len()),
        front: multi.then(|| {
            front
                .iter()
                .map(|(o, r)| FrontEntry {
                    genome_id: format!("{:016x}", r.genome_id),
                    eval_index: r.eval_index,
                    objectives: o.values().to_vec(),
                })
                .collect()
        }),
    }
}

pub fn summary_table(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "evaluations        {}", report.evals);
    let _ = writeln!(s, "valid              {}", report.valid_evals);
    match (&report.best_objectives, &report.best_genome_id) {
        (Some(b), Some(id)) => {
            let _ = writeln!(s, "best genome        {id}");
            for (i, (v, d)) in b.iter().zip(&report.directions).enumerate() {
                let _ = writeln!(s, "  obj_{i} ({d:?})  {v}");
            }
        }
        _ => {
            let _ = writeln!(s, "best genome        none");
        }
    }
    if let Some(n) = report.front_size {
        let _ = writeln!(s, "front size         {n}");
    }
    let _ = writeln!(s, "{:>10}  best-so-far", "evals");
    for p in &report.series {
        let best = p.best.as_ref().map_or("-".to_string(), |b| {
            b.iter()
                .map(|v| format!("{v:.6e}"))
                .collect::<Vec<_>>()
                .join(" ")
        });
        let _ = writeln!(s, "{:>10}  {best}", p.evals);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::JobId;

    fn row(i: u64, obj: Option<Vec<f64>>) -> LogRow {
        LogRow {
            eval_index: i,
            wallclock_s: 0.0,
            job_id: JobId(i),
            genome_id: i,
            parent_ids: vec![],
            layer: 0,
            age: 0,
            valid: obj.is_some(),
            objectives: obj.unwrap_or_default(),
        }
    }

    #[test]
    fn series_has_a_point_per_bucket() {
        let rows: Vec<LogRow> = (1..=250)
            .map(|i| row(i, Some(vec![1000.0 - i as f64])))
            .collect();
        let r = summarize(&rows, &[Direction::Minimize]);
        let evals: Vec<u64> = r.series.iter().map(|p| p.evals).collect();
        assert_eq!(evals, vec![100, 200, 250]);
        assert_eq!(r.series[0].best, Some(vec![900.0]));
        assert_eq!(r.best_objectives, Some(vec![750.0]));
        assert_eq!(r.front, None);
    }

    #[test]
    fn front_for_two_objectives() {
        let rows = vec![
            row(1, Some(vec![1.0, 3.0])),
            row(2, None),
            row(3, Some(vec![2.0, 2.0])),
            row(4, Some(vec![3.0, 3.0])),
            row(5, Some(vec![0.5, 4.0])),
        ];
        let r = summarize(&rows, &[Direction::Minimize, Direction::Minimize]);
        assert_eq!(r.front_size, Some(3));
        assert_eq!(r.valid_evals, 4);
        assert_eq!(r.best_objectives, Some(vec![0.5, 4.0]));
    }
}
