//! Runs a configuration: one coupling point with baselines, or a grid of
//! couplings in parallel.

use cddsim_core::dfs::{build_gate, LibraryOptions, LogicalGate};
use cddsim_core::engine::{
    calibrate_bath_scaling, memory_observable, CalibrationReport, ModelTemplate, SimOptions,
};
use cddsim_core::model::{Geometry, SystemModel};
use cddsim_core::sequence::Timing;
use cddsim_core::{Double, Error, FidelityRecord, Precision, Real, Result, Simulator};
use rayon::prelude::*;

use crate::config::RunConfig;

fn library_options(cfg: &RunConfig) -> LibraryOptions {
    LibraryOptions {
        cphase_file: cfg.cphase_file.clone(),
        seed: cfg.seed,
        cphase_length: cfg.cphase_length,
    }
}

fn sim_options(cfg: &RunConfig) -> SimOptions {
    SimOptions {
        packing: cfg.packing,
        ..SimOptions::default()
    }
}

fn model<T: Real>(cfg: &RunConfig, j: f64, beta: f64) -> Result<SystemModel<T>> {
    SystemModel::new(
        Geometry::new(cfg.geometry, cfg.system_count(), cfg.bath_count)?,
        T::lit(j),
        T::lit(beta),
        T::lit(cfg.bath_scaling),
    )
}

fn timing<T: Real>(cfg: &RunConfig) -> Result<Timing<T>> {
    Timing::new(T::lit(cfg.tau0), T::lit(cfg.delta))
}

/// Levels `0..=n_max` at the configured coupling, each followed by the
/// free baseline over `4^n tau0`.
pub fn run_single(cfg: &RunConfig) -> Result<Vec<FidelityRecord>> {
    match cfg.precision {
        Precision::Standard => single::<f64>(cfg),
        Precision::Extended => single::<Double>(cfg),
    }
}

fn single<T: Real>(cfg: &RunConfig) -> Result<Vec<FidelityRecord>> {
    let gate = build_gate::<T>(cfg.gate, &library_options(cfg))?;
    let model = model::<T>(cfg, cfg.j, cfg.beta)?;
    let timing = timing::<T>(cfg)?;
    let mut sim = Simulator::new(&model, sim_options(cfg));
    let mut out = Vec::with_capacity(2 * (cfg.n_max + 1));
    for n in 0..=cfg.n_max {
        out.push(sim.simulate(&gate, cfg.strategy, n, timing, &[])?);
        out.push(sim.baseline(&gate, n, timing, &[])?);
    }
    Ok(out)
}

/// `(J, beta)` cells in J-major order.
pub fn grid_cells(cfg: &RunConfig) -> Vec<(f64, f64)> {
    let g = &cfg.sweep;
    g.j_values
        .iter()
        .flat_map(|&j| g.beta_values.iter().map(move |&b| (j, b)))
        .collect()
}

/// Every grid cell at levels `0..=n_max`, no baselines. Records are ordered
/// by cell (J-major), then level, whatever the worker count.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<FidelityRecord>> {
    run_grid(cfg, &(0..=cfg.n_max).collect::<Vec<_>>())
}

/// Every grid cell at the given levels only.
pub fn run_grid(cfg: &RunConfig, levels: &[usize]) -> Result<Vec<FidelityRecord>> {
    let runs = grid_cells(cfg).len() * levels.len();
    if runs > cfg.sweep.budget {
        return Err(Error::BudgetExceeded(format!(
            "{runs} runs exceed the sweep budget of {}",
            cfg.sweep.budget
        )));
    }
    match cfg.precision {
        Precision::Standard => grid::<f64>(cfg, levels),
        Precision::Extended => grid::<Double>(cfg, levels),
    }
}

fn grid<T: Real>(cfg: &RunConfig, levels: &[usize]) -> Result<Vec<FidelityRecord>> {
    let gate = build_gate::<T>(cfg.gate, &library_options(cfg))?;
    let timing = timing::<T>(cfg)?;
    let cells = grid_cells(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let per_cell: Vec<Vec<FidelityRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(j, beta)| cell(cfg, &gate, timing, j, beta, levels))
            .collect::<Result<_>>()
    })?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn cell<T: Real>(
    cfg: &RunConfig,
    gate: &LogicalGate<T>,
    timing: Timing<T>,
    j: f64,
    beta: f64,
    levels: &[usize],
) -> Result<Vec<FidelityRecord>> {
    let model = model::<T>(cfg, j, beta)?;
    let mut sim = Simulator::new(&model, sim_options(cfg));
    levels
        .iter()
        .map(|&n| sim.simulate(gate, cfg.strategy, n, timing, &[]))
        .collect()
}

/// Bath-size calibration of the configured model, observed on memory at
/// `level`.
pub fn run_calibration(
    cfg: &RunConfig,
    bath_sizes: &[usize],
    level: usize,
) -> Result<CalibrationReport> {
    match cfg.precision {
        Precision::Standard => calibration::<f64>(cfg, bath_sizes, level),
        Precision::Extended => calibration::<Double>(cfg, bath_sizes, level),
    }
}

fn calibration<T: Real>(
    cfg: &RunConfig,
    bath_sizes: &[usize],
    level: usize,
) -> Result<CalibrationReport> {
    let template = ModelTemplate {
        kind: cfg.geometry,
        system_count: cfg.system_count(),
        j: T::lit(cfg.j),
        beta: T::lit(cfg.beta),
    };
    calibrate_bath_scaling(
        &template,
        bath_sizes,
        memory_observable(level, timing::<T>(cfg)?),
    )
}
