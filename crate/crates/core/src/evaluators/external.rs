//! Bridge to simulators running as separate processes, one job directory
//! per evaluation.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EvalJob, EvalStatus, Evaluator, EvaluatorKind, Metrics, Outcome};
use crate::individuals::Genome;

pub const PROTOCOL_VERSION: u32 = 1;
const GEOMETRY_FILE: &str = "geometry.obj";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalParams {
    /// Program and leading arguments; the job directory is appended.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Metric names the simulator reports.
    pub metrics: Vec<String>,
    /// Passed through verbatim as `params` in `input.json`.
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn default_timeout() -> f64 {
    3600.0
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl ExternalParams {
    pub fn new(command: Vec<String>, metrics: Vec<String>) -> Self {
        Self {
            command,
            timeout_s: default_timeout(),
            metrics,
            params: empty_object(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.command.is_empty() {
            return Err("command must name a program".into());
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return Err(format!("timeout_s must be > 0, got {}", self.timeout_s));
        }
        if self.metrics.is_empty() {
            return Err("metrics must list at least one name".into());
        }
        if !self.params.is_object() {
            return Err("params must be an object".into());
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct InputDocument<'a> {
    protocol_version: u32,
    job_id: String,
    individual_type: &'static str,
    genome: &'a Genome,
    geometry_file: Option<&'static str>,
    params: &'a Value,
}

#[derive(Deserialize)]
struct OutputDocument {
    job_id: String,
    status: OutputStatus,
    #[serde(default)]
    metrics: Metrics,
    #[serde(default)]
    message: Option<String>,
}

#[derive(Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum OutputStatus {
    Ok,
    Invalid,
    Error,
}

#[derive(Debug, Clone)]
pub struct ExternalEvaluator {
    params: ExternalParams,
    job_root: PathBuf,
}

impl ExternalEvaluator {
    pub fn new(params: ExternalParams, job_root: &Path) -> Self {
        Self {
            params,
            job_root: job_root.to_path_buf(),
        }
    }
}

impl Evaluator for ExternalEvaluator {
    fn kind(&self) -> EvaluatorKind {
        EvaluatorKind::External
    }

    fn metric_names(&self) -> Vec<String> {
        self.params.metrics.clone()
    }

    fn evaluate(&self, job: &EvalJob) -> Outcome {
        external_evaluate(
            job,
            &self.params.command,
            Duration::from_secs_f64(self.params.timeout_s),
            &self.job_root,
            &self.params.params,
        )
    }
}

/// Runs one job through an external program: writes `input.json` (and
/// `geometry.obj` for geometric genomes) into `root/jobs/<job_id>/`, invokes
/// `command... <absolute job dir>`, and reads `output.json`.
pub fn external_evaluate(
    job: &EvalJob,
    command: &[String],
    timeout: Duration,
    root: &Path,
    params: &Value,
) -> Outcome {
    match run(job, command, timeout, root, params) {
        Ok(outcome) => outcome,
        Err(message) => Outcome::failed(EvalStatus::Error, message),
    }
}

fn run(
    job: &EvalJob,
    command: &[String],
    timeout: Duration,
    root: &Path,
    params: &Value,
) -> Result<Outcome, String> {
    let (program, args) = command.split_first().ok_or("empty command")?;
    let id = job.job_id.to_string();
    let dir = root.join("jobs").join(&id);
    fs::create_dir_all(&dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
    let dir = dir
        .canonicalize()
        .map_err(|e| format!("resolving {}: {e}", dir.display()))?;

    let mesh = job.genome.mesh();
    let input = InputDocument {
        protocol_version: PROTOCOL_VERSION,
        job_id: id.clone(),
        individual_type: job.genome.kind().tag(),
        genome: &job.genome,
        geometry_file: mesh.as_ref().map(|_| GEOMETRY_FILE),
        params,
    };
    let text = serde_json::to_string(&input).map_err(|e| e.to_string())?;
    fs::write(dir.join("input.json"), text).map_err(|e| format!("writing input.json: {e}"))?;
    if let Some(mesh) = mesh {
        fs::write(dir.join(GEOMETRY_FILE), mesh.to_obj())
            .map_err(|e| format!("writing {GEOMETRY_FILE}: {e}"))?;
    }

    let stdout = File::create(dir.join("stdout.txt")).map_err(|e| e.to_string())?;
    let stderr_path = dir.join("stderr.txt");
    let stderr = File::create(&stderr_path).map_err(|e| e.to_string())?;
    let mut child = Command::new(program)
        .args(args)
        .arg(&dir)
        .current_dir(&dir)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
        .map_err(|e| format!("launching `{program}`: {e}"))?;

    let started = Instant::now();
    let mut pause = Duration::from_millis(1);
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| e.to_string())? {
            break status;
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(Outcome::failed(
                EvalStatus::Timeout,
                format!("killed after {:.3} s", timeout.as_secs_f64()),
            ));
        }
        thread::sleep(pause.min(timeout.saturating_sub(started.elapsed())));
        pause = (pause * 2).min(Duration::from_millis(20));
    };

    if !status.success() {
        let captured = fs::read_to_string(&stderr_path).unwrap_or_default();
        let code = status
            .code()
            .map_or("signal".to_string(), |c| c.to_string());
        return Err(format!("exit status {code}: {}", captured.trim_end()));
    }

    let text = fs::read_to_string(dir.join("output.json"))
        .map_err(|e| format!("reading output.json: {e}"))?;
    let out: OutputDocument =
        serde_json::from_str(&text).map_err(|e| format!("malformed output.json: {e}"))?;
    if out.job_id != id {
        return Err(format!(
            "output.json job_id `{}` does not match `{id}`",
            out.job_id
        ));
    }
    Ok(match out.status {
        OutputStatus::Ok => Outcome {
            status: EvalStatus::Ok,
            metrics: out.metrics,
            message: out.message,
        }
        .checked(),
        OutputStatus::Invalid => {
            Outcome::failed(EvalStatus::Invalid, out.message.unwrap_or_default())
        }
        OutputStatus::Error => Outcome::failed(EvalStatus::Error, out.message.unwrap_or_default()),
    })
}
