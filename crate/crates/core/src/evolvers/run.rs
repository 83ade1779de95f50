//! The evolver loop: drain finished evaluations, file them, breed and submit
//! new ones, and checkpoint at quiescent points.
//!
//! At `max_in_flight = 1` the event sequence is a pure function of the seed
//! and config, and a checkpoint captures everything needed to continue it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::log::{truncate_log, EvalLog, LogRow};
use super::{BestArchive, Birth, EvaluatedIndividual, EvolverError, EvolverState, Proposal};
use crate::config::{load_config, render_config, ConfigError, ExperimentConfig};
use crate::evaluators::{
    apply_fitness, EvalResult, EvalStatus, EvaluationManager, FitnessSpec, JobId, ManagerError,
};
use crate::rng::RngStream;

pub const CHECKPOINT_VERSION: u64 = 1;
const EVOLVER_STREAM: u64 = 0xE7_0173;
/// Consecutive failed births tolerated before the run gives up.
const MAX_CONSECUTIVE_SKIPS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("cannot checkpoint with {in_flight} evaluations in flight")]
    Busy { in_flight: usize },
    #[error("cannot load checkpoint: {0}")]
    Load(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Evolver(#[from] EvolverError),
    #[error(transparent)]
    Manager(#[from] ManagerError),
    #[error("result for unknown job {0}")]
    UnknownJob(JobId),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Artifact paths inside an output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub out_dir: PathBuf,
}

impl RunFiles {
    pub fn new(out_dir: &Path) -> Self {
        Self {
            out_dir: out_dir.to_path_buf(),
        }
    }
    pub fn config_snapshot(&self) -> PathBuf {
        self.out_dir.join("config.snapshot.json")
    }
    pub fn log(&self) -> PathBuf {
        self.out_dir.join("log.csv")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.out_dir.join("checkpoint.json")
    }
    pub fn best_dir(&self) -> PathBuf {
        self.out_dir.join("best")
    }
    pub fn report(&self) -> PathBuf {
        self.out_dir.join("report.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub evolver: EvolverState,
    pub rng: RngStream,
    pub evaluations_used: u64,
    pub submitted: u64,
    pub births_attempted: u64,
    pub births_skipped: u64,
    pub archive: BestArchive,
    pub wallclock_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointDoc {
    checkpoint_version: u64,
    state: RunState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Running,
    Finished,
    /// Stopped at a quiescent point after an interrupt; a checkpoint was written.
    Interrupted,
}

pub struct Run {
    config: ExperimentConfig,
    fitness: FitnessSpec,
    manager: EvaluationManager,
    state: RunState,
    in_flight: BTreeMap<JobId, Birth>,
    files: RunFiles,
    log: EvalLog,
    session_start: Instant,
    wallclock_base: f64,
    next_checkpoint: u64,
    consecutive_skips: usize,
    interrupt: Option<Arc<AtomicBool>>,
    finished: bool,
    /// Completed individuals awaiting `take_completed`, when enabled.
    completed: Option<Vec<EvaluatedIndividual>>,
}

impl Run {
    /// Starts a fresh run in `config.out_dir`, replacing any earlier log.
    /// External jobs go under `job_root` (default: the output directory).
    pub fn create(config: ExperimentConfig, job_root: Option<&Path>) -> Result<Run, RunError> {
        config.validate()?;
        let files = RunFiles::new(&config.out_dir);
        fs::create_dir_all(&files.out_dir).map_err(io_err(&files.out_dir))?;
        let snapshot = files.config_snapshot();
        fs::write(&snapshot, render_config(&config) + "\n").map_err(io_err(&snapshot))?;
        let _ = fs::remove_file(files.checkpoint());
        let log_path = files.log();
        let log = EvalLog::create(&log_path, config.fitness.len()).map_err(io_err(&log_path))?;
        let state = RunState {
            evolver: EvolverState::new(&config),
            rng: RngStream::new(config.seed, EVOLVER_STREAM),
            evaluations_used: 0,
            submitted: 0,
            births_attempted: 0,
            births_skipped: 0,
            archive: BestArchive::default(),
            wallclock_s: 0.0,
        };
        Self::assemble(config, files, log, state, job_root)
    }

    /// Continues from `out_dir/checkpoint.json`. Log rows past the
    /// checkpoint are dropped; the resumed run writes them again.
    pub fn resume(out_dir: &Path, job_root: Option<&Path>) -> Result<Run, RunError> {
        let files = RunFiles::new(out_dir);
        let mut config = load_config(&files.config_snapshot())?;
        config.out_dir = out_dir.to_path_buf();
        let cp = files.checkpoint();
        let text = fs::read_to_string(&cp)
            .map_err(|e| CheckpointError::Load(format!("{}: {e}", cp.display())))?;
        let state = Self::load_state(&text)?;
        let log_path = files.log();
        truncate_log(&log_path, state.evaluations_used).map_err(io_err(&log_path))?;
        let log = EvalLog::append(&log_path, config.fitness.len()).map_err(io_err(&log_path))?;
        Self::assemble(config, files, log, state, job_root)
    }

    fn assemble(
        config: ExperimentConfig,
        files: RunFiles,
        log: EvalLog,
        state: RunState,
        job_root: Option<&Path>,
    ) -> Result<Run, RunError> {
        let fitness = config.fitness_spec()?;
        let evaluator = config.evaluator.build(job_root.unwrap_or(&files.out_dir));
        let mut manager =
            EvaluationManager::new(evaluator, config.budget.max_in_flight, config.seed);
        manager.resume_from(state.submitted);
        let every = config.budget.checkpoint_every;
        Ok(Run {
            next_checkpoint: (state.evaluations_used / every + 1) * every,
            wallclock_base: state.wallclock_s,
            config,
            fitness,
            manager,
            state,
            in_flight: BTreeMap::new(),
            files,
            log,
            session_start: Instant::now(),
            consecutive_skips: 0,
            interrupt: None,
            finished: false,
            completed: None,
        })
    }

    pub fn load_state(text: &str) -> Result<RunState, CheckpointError> {
        let doc: CheckpointDoc =
            serde_json::from_str(text).map_err(|e| CheckpointError::Load(e.to_string()))?;
        if doc.checkpoint_version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Load(format!(
                "unsupported checkpoint version {}",
                doc.checkpoint_version
            )));
        }
        Ok(doc.state)
    }

    /// The checkpoint JSON. Only legal with nothing in flight.
    pub fn checkpoint_document(&self) -> Result<String, CheckpointError> {
        if !self.in_flight.is_empty() {
            return Err(CheckpointError::Busy {
                in_flight: self.in_flight.len(),
            });
        }
        let mut state = self.state.clone();
        state.wallclock_s = self.wallclock();
        let doc = CheckpointDoc {
            checkpoint_version: CHECKPOINT_VERSION,
            state,
        };
        Ok(serde_json::to_string(&doc).expect("run state serializes"))
    }

    /// Starts buffering every completed individual for `take_completed`.
    pub fn keep_completed(&mut self) {
        self.completed.get_or_insert_with(Vec::new);
    }

    pub fn take_completed(&mut self) -> Vec<EvaluatedIndividual> {
        self.completed
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    pub fn set_interrupt(&mut self, flag: Arc<AtomicBool>) {
        self.interrupt = Some(flag);
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn files(&self) -> &RunFiles {
        &self.files
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn evolver_mut(&mut self) -> &mut EvolverState {
        &mut self.state.evolver
    }

    pub fn in_flight(&self) -> usize {
        self.manager.in_flight()
    }

    pub fn is_complete(&self) -> bool {
        self.state.evaluations_used >= self.config.budget.max_evaluations
    }

    fn wallclock(&self) -> f64 {
        self.wallclock_base + self.session_start.elapsed().as_secs_f64()
    }

    fn interrupted(&self) -> bool {
        self.interrupt
            .as_ref()
            .is_some_and(|f| f.load(Ordering::SeqCst))
    }

    /// One scheduler iteration. Errors with `BudgetExhausted` once the run
    /// has finished.
    pub fn step(&mut self) -> Result<StepStatus, RunError> {
        if self.finished {
            return Err(EvolverError::BudgetExhausted.into());
        }
        while let Some(r) = self.manager.next_completed(false)? {
            self.handle(r)?;
        }

        if self.in_flight.is_empty() {
            if self.is_complete() {
                self.save_checkpoint()?;
                self.finished = true;
                return Ok(StepStatus::Finished);
            }
            if self.interrupted() {
                self.save_checkpoint()?;
                return Ok(StepStatus::Interrupted);
            }
            if self.state.evaluations_used >= self.next_checkpoint {
                self.save_checkpoint()?;
            }
        }

        // A pending checkpoint or interrupt holds submissions until the
        // in-flight jobs drain.
        let holding = self.interrupted() || self.state.evaluations_used >= self.next_checkpoint;
        let mut submitted = 0;
        while !holding
            && self.state.submitted < self.config.budget.max_evaluations
            && self.manager.has_capacity()
        {
            self.state.births_attempted += 1;
            match self
                .state
                .evolver
                .propose(&self.config, &mut self.state.rng)?
            {
                Proposal::Submit(birth) => {
                    let id = self
                        .manager
                        .submit(birth.genome.clone(), self.state.evaluations_used)?;
                    self.in_flight.insert(id, birth);
                    self.state.submitted += 1;
                    self.consecutive_skips = 0;
                    submitted += 1;
                }
                Proposal::Wait => {
                    self.state.births_attempted -= 1;
                    break;
                }
                Proposal::Skip(e) => {
                    self.state.births_skipped += 1;
                    self.consecutive_skips += 1;
                    log::warn!("birth {} skipped: {e}", self.state.births_attempted);
                    if self.consecutive_skips >= MAX_CONSECUTIVE_SKIPS {
                        return Err(EvolverError::BirthsFailing {
                            attempts: self.consecutive_skips,
                            last: e,
                        }
                        .into());
                    }
                }
            }
        }

        if submitted == 0 {
            if self.in_flight.is_empty() {
                if holding || self.is_complete() {
                    return Ok(StepStatus::Running);
                }
                return Err(EvolverError::Stalled.into());
            }
            let r = self
                .manager
                .next_completed(true)?
                .expect("jobs are pending");
            self.handle(r)?;
        }
        Ok(StepStatus::Running)
    }

    /// Steps until the budget is spent or an interrupt is honoured.
    pub fn run_to_end(&mut self) -> Result<StepStatus, RunError> {
        if self.is_complete() {
            return Ok(StepStatus::Finished);
        }
        loop {
            match self.step()? {
                StepStatus::Running => {}
                done => return Ok(done),
            }
        }
    }

    fn handle(&mut self, r: EvalResult) -> Result<(), RunError> {
        let birth = self
            .in_flight
            .remove(&r.job_id)
            .ok_or(RunError::UnknownJob(r.job_id))?;
        if r.status != EvalStatus::Ok {
            log::info!(
                "job {} returned {:?}: {}",
                r.job_id,
                r.status,
                r.message.as_deref().unwrap_or("")
            );
        }
        let objectives = match apply_fitness(&self.fitness, &r) {
            Ok(o) => Some(o),
            Err(e) => {
                log::debug!("job {} has no objectives: {e}", r.job_id);
                None
            }
        };
        self.state.evaluations_used += 1;
        let eval_index = self.state.evaluations_used;
        let ind = self.state.evolver.complete(
            &self.config,
            birth,
            objectives,
            eval_index,
            &mut self.state.rng,
        )?;
        self.state.archive.offer(&ind);
        let row = LogRow {
            eval_index,
            wallclock_s: self.wallclock(),
            job_id: r.job_id,
            genome_id: ind.id,
            parent_ids: ind.parent_ids.clone(),
            layer: ind.layer,
            age: ind.age,
            valid: ind.is_valid(),
            objectives: ind
                .objectives
                .as_ref()
                .map(|o| o.values().to_vec())
                .unwrap_or_default(),
        };
        if let Some(buf) = &mut self.completed {
            buf.push(ind);
        }
        let path = self.log.path().to_path_buf();
        self.log.write(&row).map_err(io_err(&path))
    }

    /// Writes `checkpoint.json` (atomically) and refreshes `best/`.
    pub fn save_checkpoint(&mut self) -> Result<(), RunError> {
        let text = self.checkpoint_document()?;
        let path = self.files.checkpoint();
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        let every = self.config.budget.checkpoint_every;
        self.next_checkpoint = (self.state.evaluations_used / every + 1) * every;
        self.write_best()
    }

    fn write_best(&self) -> Result<(), RunError> {
        let Some(best) = self.state.archive.best() else {
            return Ok(());
        };
        let dir = self.files.best_dir();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let genome = dir.join("genome.json");
        fs::write(&genome, best.genome.to_document()).map_err(io_err(&genome))?;
        let obj = dir.join("geometry.obj");
        match best.genome.mesh() {
            Some(mesh) => fs::write(&obj, mesh.to_obj()).map_err(io_err(&obj))?,
            None => {
                let _ = fs::remove_file(&obj);
            }
        }
        if self.config.fitness.len() > 1 {
            let front: Vec<_> = self
                .state
                .archive
                .members()
                .iter()
                .map(|m| {
                    json!({
                        "genome_id": format!("{:016x}", m.id),
                        "eval_index": m.birth_eval_index,
                        "objectives": m.objectives.as_ref().map(|o| o.values().to_vec()),
                        "genome": &m.genome,
                    })
                })
                .collect();
            let path = dir.join("front.json");
            let text = serde_json::to_string_pretty(&front).expect("front serializes");
            fs::write(&path, text).map_err(io_err(&path))?;
        }
        Ok(())
    }
}
