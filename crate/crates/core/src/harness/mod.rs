//! Batched Monte Carlo experiments.
//!
//! An [`ExperimentConfig`] names a problem template, a mutation scheme
//! template and a list of cells (fixed lengths or length distributions).
//! Every trial gets its own seed, `trial_seed(cell_seed(master, cell), t)`,
//! so results do not depend on how trials are scheduled over threads.
//!
//! ```
//! use ea_lab::harness::{run_experiment, presets};
//!
//! let mut cfg = presets::preset_suite("lo-exact-uniform")?.remove(0);
//! cfg.trials = 200;
//! let out = run_experiment(&cfg, Some(1))?;
//! assert_eq!(out.raw.len(), 200 * out.summary.cells.len());
//! # Ok::<(), ea_lab::Error>(())
//! ```

pub mod config;
pub mod output;
pub mod presets;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{Diagnostic, ExperimentConfig, Severity};
pub use output::{Format, RawRecord};
pub use stats::{fit_scaling, CellSummary, ScalingFit};

use crate::ea::{run_on_stream, Engine, RunRecord};
use crate::error::{Error, Result};
use crate::rng::{cell_seed, trial_seed, RngStream};
use config::{Cell, ResolvedExperiment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment_id: String,
    pub cells: Vec<CellSummary>,
    /// Exponent of mean evaluations against `n`, for sweeps of at least
    /// three lengths where every cell has a mean.
    pub fit: Option<ScalingFit>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    /// Sorted by cell, then trial index.
    pub raw: Vec<RawRecord>,
}

/// One trial: draw the length, build the problem and run, all on the
/// trial's own stream.
pub fn run_trial(exp: &ResolvedExperiment, cell: &Cell, seed: u64) -> Result<RunRecord> {
    let mut rng = RngStream::new(seed);
    let n = cell.dist.sample(&mut rng);
    let (spec, scheme) = exp.instantiate(cell, n, &mut rng)?;
    let mut record = run_on_stream(&spec, &scheme, exp.config.budget, None, &mut rng, Engine::Auto)?;
    record.seed = seed;
    Ok(record)
}

/// Runs every cell of `cfg`. `threads` overrides the config's hint; with
/// neither, rayon's global pool is used.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    let exp = cfg.resolve()?;
    match threads.or(cfg.threads) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_resolved(&exp)),
        None => run_resolved(&exp),
    }
}

fn run_resolved(exp: &ResolvedExperiment) -> Result<ExperimentOutput> {
    let cfg = &exp.config;
    let mut raw = Vec::with_capacity(exp.cells.len() * cfg.trials as usize);
    let mut cells = Vec::with_capacity(exp.cells.len());
    for cell in &exp.cells {
        let base = cell_seed(cfg.master_seed, cell.ordinal as u64);
        let records = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(exp, cell, trial_seed(base, t)))
            .collect::<Result<Vec<_>>>()?;
        cells.push(stats::summarize(&cfg.id, &cell.key, &records));
        raw.extend(records.iter().enumerate().map(|(t, r)| RawRecord {
            experiment_id: cfg.id.clone(),
            cell_key: cell.key.clone(),
            trial_index: t as u64,
            seed: r.seed,
            realized_length: r.realized_length,
            evaluations: r.evaluations,
            hit_budget: r.hit_budget,
        }));
    }
    let fit = sweep_fit(exp, &cells);
    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            experiment_id: cfg.id.clone(),
            cells,
            fit,
        },
        raw,
    })
}

fn sweep_fit(exp: &ResolvedExperiment, cells: &[CellSummary]) -> Option<ScalingFit> {
    let points: Option<Vec<(f64, f64)>> = exp
        .cells
        .iter()
        .zip(cells)
        .map(|(c, s)| Some((c.fixed_length()? as f64, s.mean?)))
        .collect();
    fit_scaling(&points?).ok()
}
