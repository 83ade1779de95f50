//! Asynchronous evaluation on a fixed pool of worker threads.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use thiserror::Error;

use super::{EvalJob, EvalResult, EvalStatus, Evaluator, EvaluatorKind, JobId, Outcome};
use crate::individuals::{compatible, Genome, IndividualKind};
use crate::rng::{mix64, RngStream};

const JOB_SALT: u64 = 0x6A09_E667_F3BC_C908;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManagerError {
    #[error("{max_in_flight} evaluations already in flight")]
    CapacityExceeded { max_in_flight: usize },
    #[error("{individual} genomes cannot be evaluated by the {evaluator} evaluator")]
    IncompatiblePairing {
        individual: IndividualKind,
        evaluator: EvaluatorKind,
    },
    #[error("no evaluations are pending")]
    NothingPending,
    #[error("evaluation workers have shut down")]
    Disconnected,
}

/// Runs up to `max_in_flight` evaluations concurrently. A job counts as
/// pending from `submit` until its result is returned by `next_completed`.
pub struct EvaluationManager {
    evaluator: Arc<dyn Evaluator>,
    max_in_flight: usize,
    seed: u64,
    submitted: u64,
    pending: BTreeSet<JobId>,
    jobs: Option<Sender<EvalJob>>,
    results: Receiver<EvalResult>,
    workers: Vec<JoinHandle<()>>,
}

impl EvaluationManager {
    pub fn new(evaluator: Arc<dyn Evaluator>, max_in_flight: usize, seed: u64) -> Self {
        assert!(max_in_flight >= 1, "max_in_flight must be positive");
        let (job_tx, job_rx) = mpsc::channel::<EvalJob>();
        let (result_tx, result_rx) = mpsc::channel();
        let job_rx = Arc::new(Mutex::new(job_rx));
        let workers = (0..max_in_flight)
            .map(|i| {
                let jobs = Arc::clone(&job_rx);
                let results = result_tx.clone();
                let evaluator = Arc::clone(&evaluator);
                thread::Builder::new()
                    .name(format!("eval-worker-{i}"))
                    .spawn(move || worker(&*evaluator, &jobs, &results))
                    .expect("spawning evaluation worker")
            })
            .collect();
        Self {
            evaluator,
            max_in_flight,
            seed,
            submitted: 0,
            pending: BTreeSet::new(),
            jobs: Some(job_tx),
            results: result_rx,
            workers,
        }
    }

    pub fn evaluator(&self) -> &Arc<dyn Evaluator> {
        &self.evaluator
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    pub fn has_capacity(&self) -> bool {
        self.pending.len() < self.max_in_flight
    }

    pub fn is_pending(&self, id: JobId) -> bool {
        self.pending.contains(&id)
    }

    /// Number of jobs submitted so far; job ids are derived from it.
    pub fn submitted(&self) -> u64 {
        self.submitted
    }

    /// Continues the job-id sequence of an earlier run.
    pub fn resume_from(&mut self, submitted: u64) {
        assert!(self.pending.is_empty(), "cannot rewind with jobs in flight");
        self.submitted = submitted;
    }

    /// Bijective in `index` for a fixed seed, so ids never repeat in a run.
    pub fn job_id_for(seed: u64, index: u64) -> JobId {
        JobId(mix64(mix64(seed ^ JOB_SALT) ^ index))
    }

    pub fn submit(&mut self, genome: Genome, eval_index: u64) -> Result<JobId, ManagerError> {
        if !self.has_capacity() {
            return Err(ManagerError::CapacityExceeded {
                max_in_flight: self.max_in_flight,
            });
        }
        let kind = genome.kind();
        if !compatible(kind, self.evaluator.kind()) {
            return Err(ManagerError::IncompatiblePairing {
                individual: kind,
                evaluator: self.evaluator.kind(),
            });
        }
        let job_id = Self::job_id_for(self.seed, self.submitted);
        let job = EvalJob {
            job_id,
            genome,
            submitted_at_eval_index: eval_index,
            rng: RngStream::new(self.seed, job_id.0),
        };
        self.jobs
            .as_ref()
            .expect("sender lives until drop")
            .send(job)
            .map_err(|_| ManagerError::Disconnected)?;
        self.submitted += 1;
        self.pending.insert(job_id);
        Ok(job_id)
    }

    /// `block = false` returns `Ok(None)` when nothing has finished.
    pub fn next_completed(&mut self, block: bool) -> Result<Option<EvalResult>, ManagerError> {
        if block && self.pending.is_empty() {
            return Err(ManagerError::NothingPending);
        }
        let result = if block {
            self.results
                .recv()
                .map_err(|_| ManagerError::Disconnected)?
        } else {
            match self.results.try_recv() {
                Ok(r) => r,
                Err(TryRecvError::Empty) => return Ok(None),
                Err(TryRecvError::Disconnected) => return Err(ManagerError::Disconnected),
            }
        };
        let was_pending = self.pending.remove(&result.job_id);
        debug_assert!(was_pending, "result for unknown job {}", result.job_id);
        Ok(Some(result))
    }
}

impl Drop for EvaluationManager {
    fn drop(&mut self) {
        self.jobs.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn worker(
    evaluator: &dyn Evaluator,
    jobs: &Mutex<Receiver<EvalJob>>,
    results: &Sender<EvalResult>,
) {
    loop {
        let job = match jobs.lock() {
            Ok(rx) => match rx.recv() {
                Ok(job) => job,
                Err(_) => return,
            },
            Err(_) => return,
        };
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| evaluator.evaluate(&job)))
            .unwrap_or_else(|_| Outcome::failed(EvalStatus::Error, "evaluator panicked"))
            .checked();
        let result = EvalResult {
            job_id: job.job_id,
            status: outcome.status,
            metrics: outcome.metrics,
            message: outcome.message,
            duration_s: started.elapsed().as_secs_f64(),
        };
        if results.send(result).is_err() {
            return;
        }
    }
}
