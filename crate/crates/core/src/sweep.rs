//! Error, runtime and memory comparison of strategies against the full
//! memory reference.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::FieldGrid;
use crate::marcher::{run, SimConfig};
use crate::memory::MemoryStrategy;

/// One `(strategy, γ)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub strategy: MemoryStrategy,
    pub gamma: f64,
    pub steps: usize,
    pub wall_time_s: f64,
    pub rel_error_pct: f64,
    /// Peak number of kernel fields held by the store.
    pub nodes_stored: usize,
    /// Peak number of terms in one backward sum.
    pub peak_terms: usize,
    /// Set when the cell failed; the numeric fields are then NaN or zero.
    pub failure: Option<String>,
}

impl BenchRecord {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    fn failed(strategy: MemoryStrategy, gamma: f64, steps: usize, err: &Error) -> Self {
        Self {
            strategy,
            gamma,
            steps,
            wall_time_s: f64::NAN,
            rel_error_pct: f64::NAN,
            nodes_stored: 0,
            peak_terms: 0,
            failure: Some(err.to_string()),
        }
    }

    fn sort_key(&self) -> (u8, f64, f64) {
        (
            self.strategy.rank(),
            self.strategy.param().unwrap_or(0.0),
            self.gamma,
        )
    }
}

/// Final field of `cfg` under the full-memory strategy.
pub fn reference_run(cfg: &SimConfig) -> Result<FieldGrid> {
    Ok(run(&cfg.with_strategy(MemoryStrategy::Full))?.final_field)
}

/// `100 · ‖u - reference‖₁ / ‖reference‖₁`. Zero when the fields are
/// identical, even if the reference itself is zero.
pub fn rel_error_pct(u: &FieldGrid, reference: &FieldGrid) -> f64 {
    let (mut diff, mut norm) = (0.0, 0.0);
    for (a, b) in u.data().iter().zip(reference.data()) {
        diff += (a - b).abs();
        norm += b.abs();
    }
    if diff == 0.0 {
        0.0
    } else {
        100.0 * diff / norm
    }
}

/// Sweep settings beyond the base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    /// Worker threads; `0` lets the pool pick.
    pub workers: usize,
    /// Runs per cell; the fastest wall time is reported.
    pub repeat: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            repeat: 1,
        }
    }
}

fn measure(cfg: &SimConfig, reference: &FieldGrid, repeat: usize) -> Result<BenchRecord> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeat.max(1) {
        let start = Instant::now();
        let traj = run(cfg)?;
        best = best.min(start.elapsed().as_secs_f64());
        last = Some(traj);
    }
    let traj = last.expect("at least one repetition");
    Ok(BenchRecord {
        strategy: cfg.strategy.clone(),
        gamma: cfg.gamma,
        steps: cfg.steps,
        wall_time_s: best,
        rel_error_pct: rel_error_pct(&traj.final_field, reference),
        nodes_stored: traj.peak_nodes,
        peak_terms: traj.peak_terms,
        failure: None,
    })
}

/// Runs every `(strategy, γ)` cell of `base` and scores it against the full
/// memory run at the same `γ`. Cells that fail become failed rows; a failed
/// reference fails its whole `γ` column. Output is sorted by strategy,
/// parameter and `γ`, independent of scheduling.
pub fn sweep(
    base: &SimConfig,
    strategies: &[MemoryStrategy],
    gammas: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<BenchRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let gamma_cfg = |g: f64| SimConfig {
        gamma: g,
        ..base.clone()
    };
    for &g in gammas {
        for s in strategies {
            gamma_cfg(g).with_strategy(s.clone()).validate()?;
        }
    }

    let mut records = pool.install(|| {
        let references: Vec<Result<FieldGrid>> =
            gammas.par_iter().map(|&g| reference_run(&gamma_cfg(g))).collect();
        let cells: Vec<(usize, &MemoryStrategy)> = (0..gammas.len())
            .flat_map(|gi| strategies.iter().map(move |s| (gi, s)))
            .collect();
        cells
            .par_iter()
            .map(|&(gi, s)| {
                let cfg = gamma_cfg(gammas[gi]).with_strategy(s.clone());
                let outcome = references[gi]
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|r| measure(&cfg, r, opts.repeat));
                outcome.unwrap_or_else(|e| {
                    log::warn!("sweep cell {s} at gamma={} failed: {e}", cfg.gamma);
                    BenchRecord::failed(s.clone(), cfg.gamma, cfg.steps, &e)
                })
            })
            .collect::<Vec<_>>()
    });
    records.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).expect("finite keys"));
    Ok(records)
}

/// `(wall_time_s, rel_error_pct)` series per strategy tag and `γ`, in
/// parameter order, skipping failed rows.
pub fn plot_series(records: &[BenchRecord]) -> BTreeMap<(String, String), Vec<(f64, f64)>> {
    let mut out: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok()) {
        out.entry((r.strategy.tag().to_string(), format!("{}", r.gamma)))
            .or_default()
            .push((r.wall_time_s, r.rel_error_pct));
    }
    out
}
