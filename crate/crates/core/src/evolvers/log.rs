//! The per-evaluation CSV log.
//!
//! `eval_index,wallclock_s,job_id,genome_id,parent_ids,layer,age,valid,obj_0,...`
//! Ids are 16 hex digits; parent ids are joined with `;`. Objective cells
//! are empty for invalid evaluations. Rows are written with a single
//! `write_all` each so a crash never leaves half a row behind a newline.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::evaluators::JobId;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub eval_index: u64,
    pub wallclock_s: f64,
    pub job_id: JobId,
    pub genome_id: u64,
    pub parent_ids: Vec<u64>,
    pub layer: usize,
    pub age: u64,
    pub valid: bool,
    /// Empty when `valid` is false.
    pub objectives: Vec<f64>,
}

pub fn header(objectives: usize) -> String {
    let mut h = String::from("eval_index,wallclock_s,job_id,genome_id,parent_ids,layer,age,valid");
    for i in 0..objectives {
        h.push_str(&format!(",obj_{i}"));
    }
    h
}

impl LogRow {
    /// One line without the trailing newline. `width` is the objective count.
    pub fn render(&self, width: usize) -> String {
        let parents: Vec<String> = self
            .parent_ids
            .iter()
            .map(|p| format!("{p:016x}"))
            .collect();
        let mut line = format!(
            "{},{:.6},{},{:016x},{},{},{},{}",
            self.eval_index,
            self.wallclock_s,
            self.job_id,
            self.genome_id,
            parents.join(";"),
            self.layer,
            self.age,
            self.valid
        );
        for i in 0..width {
            line.push(',');
            if let Some(v) = self.objectives.get(i) {
                line.push_str(&v.to_string());
            }
        }
        line
    }

    pub fn parse(line: &str) -> Result<LogRow, String> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() < 8 {
            return Err(format!("expected at least 8 columns, got {}", cells.len()));
        }
        let hex = |s: &str| u64::from_str_radix(s, 16).map_err(|e| format!("bad id `{s}`: {e}"));
        let num = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|e| format!("bad {what} `{s}`: {e}"))
        };
        let valid = match cells[7] {
            "true" => true,
            "false" => false,
            other => return Err(format!("bad valid flag `{other}`")),
        };
        let objectives = if valid {
            cells[8..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| format!("bad objective `{s}`: {e}"))
                })
                .collect::<Result<_, _>>()?
        } else {
            Vec::new()
        };
        Ok(LogRow {
            eval_index: num(cells[0], "eval_index")?,
            wallclock_s: cells[1]
                .parse()
                .map_err(|e| format!("bad wallclock `{}`: {e}", cells[1]))?,
            job_id: JobId(hex(cells[2])?),
            genome_id: hex(cells[3])?,
            parent_ids: if cells[4].is_empty() {
                Vec::new()
            } else {
                cells[4].split(';').map(hex).collect::<Result<_, _>>()?
            },
            layer: num(cells[5], "layer")? as usize,
            age: num(cells[6], "age")?,
            valid,
            objectives,
        })
    }
}

/// Append-only writer.
pub struct EvalLog {
    path: PathBuf,
    file: File,
    width: usize,
}

impl EvalLog {
    /// Starts a fresh log, replacing any existing file.
    pub fn create(path: &Path, width: usize) -> io::Result<EvalLog> {
        fs::write(path, format!("{}\n", header(width)))?;
        Self::append(path, width)
    }

    pub fn append(path: &Path, width: usize) -> io::Result<EvalLog> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(EvalLog {
            path: path.to_path_buf(),
            file,
            width,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, row: &LogRow) -> io::Result<()> {
        let mut line = row.render(self.width);
        line.push('\n');
        self.file.write_all(line.as_bytes())
    }
}

/// Header and rows of a log file; blank lines are ignored.
pub fn read_log(path: &Path) -> io::Result<(String, Vec<Result<LogRow, String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines.filter(|l| !l.is_empty()).map(LogRow::parse).collect();
    Ok((header, rows))
}

/// Drops every row after the first `keep`, so a resumed run can replay
/// them.
pub fn truncate_log(path: &Path, keep: u64) -> io::Result<()> {
    let text = fs::read_to_string(path)?;
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        if i as u64 > keep {
            break;
        }
        out.push_str(line);
        out.push('\n');
    }
    fs::write(path, out)
}

/// The log with the wallclock column blanked, for byte comparisons between
/// runs.
pub fn strip_wallclock(text: &str) -> String {
    text.lines()
        .map(|line| {
            let mut cells: Vec<&str> = line.split(',').collect();
            if cells.len() > 1 {
                cells[1] = "";
            }
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(valid: bool) -> LogRow {
        LogRow {
            eval_index: 7,
            wallclock_s: 1.25,
            job_id: JobId(0xfeed),
            genome_id: 0xabc,
            parent_ids: vec![1, 0xffff_ffff_ffff_ffff],
            layer: 2,
            age: 11,
            valid,
            objectives: if valid { vec![0.1, -3e-20] } else { vec![] },
        }
    }

    #[test]
    fn header_columns() {
        assert_eq!(
            header(2),
            "eval_index,wallclock_s,job_id,genome_id,parent_ids,layer,age,valid,obj_0,obj_1"
        );
    }

    #[test]
    fn rows_round_trip() {
        for valid in [true, false] {
            let r = row(valid);
            let text = r.render(2);
            assert_eq!(text.split(',').count(), 10);
            assert_eq!(LogRow::parse(&text).unwrap(), r);
        }
        assert_eq!(
            row(true).render(2),
            "7,1.250000,000000000000feed,0000000000000abc,0000000000000001;ffffffffffffffff,2,11,true,0.1,-0.00000000000000000003"
        );
    }

    #[test]
    fn truncation_keeps_header_and_prefix() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let mut log = EvalLog::create(&path, 2).unwrap();
        for i in 1..=5 {
            log.write(&LogRow {
                eval_index: i,
                ..row(true)
            })
            .unwrap();
        }
        truncate_log(&path, 3).unwrap();
        let (h, rows) = read_log(&path).unwrap();
        assert_eq!(h, header(2));
        let idx: Vec<u64> = rows.into_iter().map(|r| r.unwrap().eval_index).collect();
        assert_eq!(idx, vec![1, 2, 3]);
    }

    #[test]
    fn wallclock_is_blanked() {
        assert_eq!(strip_wallclock("a,b,c\n1,2.5,x"), "a,,c\n1,,x");
    }
}
