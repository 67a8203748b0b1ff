//! Run orchestration: evolve, write snapshots, evaluate checks, summarize.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use phasespace::observables::{summarize, ObservableSummary};
use phasespace::propagator::{evolve, SPLITTING_ORDER};
use phasespace::scenarios::{evaluate_check, CheckOutcome, RunRecord};
use phasespace::{make_grid, EvolutionMode, Field};

use crate::config::RunConfig;
use crate::snapshot::{snapshot_stem, write_snapshot, ModelText, SnapshotHeader, SCHEMA_VERSION};
use crate::CliError;

/// Name of the marker left in the output directory when a run stops early.
pub const PARTIAL_MARKER: &str = "PARTIAL";

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub name: String,
    pub mode: EvolutionMode,
    pub steps: usize,
    pub t_end: f64,
    pub snapshots: usize,
    pub output: Option<PathBuf>,
    pub wall_seconds: f64,
    #[serde(rename = "final")]
    pub last: ObservableSummary,
    pub checks: Vec<CheckOutcome>,
    pub all_checks_passed: bool,
}

#[derive(Serialize)]
struct PartialMarker<'a> {
    run_id: &'a str,
    last_written_step: Option<usize>,
    error: String,
}

/// Executes a run. Snapshots go to `out` when it is given; progress is
/// logged per snapshot.
pub fn execute(config: &RunConfig, out: Option<&Path>) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let run_id = config.run_id();
    let grid = make_grid(&config.axes, config.hbar)?;
    let initial = config.initial.build(config.mode, &config.model, &grid, config.t0)?;

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let stale = dir.join(PARTIAL_MARKER);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
        }
    }

    let model_text = ModelText {
        kinetic: config.model.kinetic().to_string(),
        potential: config.model.potential().to_string(),
        params: config.model.params().clone(),
    };
    let mut written = 0usize;
    let mut last_written = None;
    let mut sink = |step: usize, time: f64, field: &Field, summary: &ObservableSummary| {
        log::info!(
            "step {step:>6}  t = {time:<10.4}  integral = {:.12}  <H> = {:.8}",
            summary.total_integral,
            summary.energy
        );
        if let Some(dir) = out {
            let header = SnapshotHeader {
                schema_version: SCHEMA_VERSION.into(),
                run_id: run_id.clone(),
                mode: config.mode,
                step,
                time,
                axes: config.axes.clone(),
                reps: field.reps().to_vec(),
                hbar: config.hbar,
                model: model_text.clone(),
                splitting_order: SPLITTING_ORDER.into(),
                summary: summary.clone(),
                payload: format!("{}.bin", snapshot_stem(step)),
            };
            write_snapshot(dir, &header, field)?;
            last_written = Some(step);
        }
        written += 1;
        Ok(())
    };

    let every = if out.is_some() { config.snapshot_every } else { 0 };
    let result = evolve(&initial, config.mode, &config.model, config.t0, config.dt, config.n_steps, every, &mut sink);
    let last = match result {
        Ok(f) => f,
        Err(e) => {
            if let Some(dir) = out {
                let marker = PartialMarker { run_id: &run_id, last_written_step: last_written, error: e.to_string() };
                let text = serde_json::to_string_pretty(&marker).unwrap_or_else(|_| e.to_string());
                if let Err(w) = fs::write(dir.join(PARTIAL_MARKER), text) {
                    log::error!("could not write the partial-run marker: {w}");
                }
            }
            return Err(e.into());
        }
    };

    let t_end = config.t0 + config.dt * config.n_steps as f64;
    let record = RunRecord {
        mode: config.mode,
        model: &config.model,
        initial_state: &config.initial,
        initial: &initial,
        last: &last,
        t0: config.t0,
        t1: t_end,
    };
    let checks = config.checks.iter().map(|c| evaluate_check(c, &record)).collect::<Result<Vec<_>, _>>()?;
    let summary = RunSummary {
        run_id,
        name: config.name.clone(),
        mode: config.mode,
        steps: config.n_steps,
        t_end,
        snapshots: written,
        output: out.map(Path::to_path_buf),
        wall_seconds: started.elapsed().as_secs_f64(),
        last: summarize(&last, config.mode, &config.model, t_end)?,
        all_checks_passed: checks.iter().all(|c| c.passed),
        checks,
    };
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(dir, io::Error::other(e)))?;
        let path = dir.join("summary.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(summary)
}
