//! `hwevo`: run, resume, and inspect evolutionary hardware-design experiments.
//!
//! Exit codes: 0 success (including an interrupted run that checkpointed),
//! 2 bad input (config, checkpoint, log, genome), 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hwevo_core::config::load_config;
use hwevo_core::evolvers::report::{summary_table, write_report, ReportError};
use hwevo_core::evolvers::{Run, RunError, StepStatus};
use hwevo_core::individuals::Genome;

/// Overrides the directory external-evaluator jobs are created under.
const JOB_ROOT_ENV: &str = "ECLIPSE_JOB_ROOT";

#[derive(Parser)]
#[command(
    name = "hwevo",
    version,
    about = "Evolve hardware designs against black-box simulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run from a JSON experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "max-evals")]
        max_evals: Option<u64>,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Continue a run from its last checkpoint.
    Resume {
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Summarize a run directory into report.json.
    Report {
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Tessellate a genome document to OBJ.
    ExportMesh {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error tagged with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 3,
        error: error.into(),
    }
}

fn classify(e: RunError) -> Failure {
    match e {
        RunError::Config(_) | RunError::Checkpoint(_) => input(e),
        _ => runtime(e),
    }
}

fn job_root() -> Option<PathBuf> {
    std::env::var_os(JOB_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = flag.clone();
    let installed = ctrlc::set_handler(move || {
        if handler_flag.swap(true, Ordering::SeqCst) {
            eprintln!("second interrupt: exiting without a checkpoint");
            std::process::exit(130);
        }
        eprintln!("interrupt: stopping at the next quiescent point (press again to abort)");
    });
    if let Err(e) = installed {
        log::warn!("cannot install interrupt handler: {e}");
    }
    flag
}

fn drive(mut run: Run) -> Result<(), Failure> {
    run.set_interrupt(interrupt_flag());
    let status = run.run_to_end().map_err(classify)?;
    let out = run.files().out_dir.clone();
    match status {
        StepStatus::Interrupted => {
            eprintln!(
                "interrupted after {} evaluations; checkpoint written to {}",
                run.state().evaluations_used,
                run.files().checkpoint().display()
            );
            Ok(())
        }
        _ => {
            drop(run);
            let report = write_report(&out).map_err(report_failure)?;
            print!("{}", summary_table(&report));
            Ok(())
        }
    }
}

fn report_failure(e: ReportError) -> Failure {
    match e {
        ReportError::Io { .. } => runtime(e),
        _ => input(e),
    }
}

fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    max_evals: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut config = load_config(config).map_err(input)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(n) = max_evals {
        config.budget.max_evaluations = n;
    }
    if let Some(dir) = out_dir {
        config.out_dir = dir;
    }
    config.validate().map_err(input)?;
    let run = Run::create(config, job_root().as_deref()).map_err(classify)?;
    log::info!("run started in {}", run.files().out_dir.display());
    drive(run)
}

fn cmd_resume(out_dir: &Path) -> Result<(), Failure> {
    let run = Run::resume(out_dir, job_root().as_deref()).map_err(classify)?;
    if run.is_complete() {
        eprintln!(
            "run in {} already finished ({} evaluations); nothing to do",
            out_dir.display(),
            run.state().evaluations_used
        );
        return Ok(());
    }
    log::info!("resuming at {} evaluations", run.state().evaluations_used);
    drive(run)
}

fn cmd_report(out_dir: &Path) -> Result<(), Failure> {
    let report = write_report(out_dir).map_err(report_failure)?;
    print!("{}", summary_table(&report));
    Ok(())
}

fn cmd_export_mesh(genome: &Path, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(genome)
        .with_context(|| format!("reading {}", genome.display()))
        .map_err(input)?;
    let genome = Genome::from_document(&text).map_err(input)?;
    let mesh = genome.mesh().ok_or_else(|| {
        input(anyhow::anyhow!(
            "{} genomes have no geometry",
            genome.kind()
        ))
    })?;
    fs::write(out, mesh.to_obj())
        .with_context(|| format!("writing {}", out.display()))
        .map_err(runtime)?;
    println!(
        "{} vertices, {} faces -> {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            max_evals,
            out_dir,
        } => cmd_run(&config, seed, max_evals, out_dir),
        Command::Resume { out_dir } => cmd_resume(&out_dir),
        Command::Report { out_dir } => cmd_report(&out_dir),
        Command::ExportMesh { genome, out } => cmd_export_mesh(&genome, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
