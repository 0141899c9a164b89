//! Explicit forward-time centred-space marching of
//! `∂u/∂t = α D^{1-γ} ∇²u - βu` on a zero-Dirichlet grid.
//!
//! One step is
//!
//! ```text
//! u^{k+1} = u^k + Δt [ α Δt^{γ-1} / Δx² Σ ψ(γ, k-i) w_i δ^i  -  β u^k ]
//! ```
//!
//! where the sum runs over whatever terms the memory strategy supplies.

use crate::continuum;
use crate::error::{Error, Result};
use crate::lattice::{laplacian_kernel, FieldGrid, GridShape, KernelField, PointSource};
use crate::memory::{HistoryStore, MemoryStrategy, SummationTerm};
use crate::weights::{validate_gamma, PsiTable};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub gamma: f64,
    /// Fractional diffusivity, length² / time^γ.
    pub alpha: f64,
    /// Linear decay rate, 1 / time.
    pub beta: f64,
    pub dt: f64,
    pub dx: f64,
    pub nx: usize,
    /// 1 for a line.
    pub ny: usize,
    pub steps: usize,
    pub initial: Vec<PointSource>,
    pub strategy: MemoryStrategy,
    /// Snapshot period in steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl SimConfig {
    pub fn shape(&self) -> Result<GridShape> {
        GridShape::new(self.nx, self.ny)
    }

    pub fn validate(&self) -> Result<()> {
        validate_gamma(self.gamma)?;
        positive("dt", self.dt)?;
        positive("dx", self.dx)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain {
                name: "alpha",
                value: self.alpha,
                reason: "must be non-negative",
            });
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain {
                name: "beta",
                value: self.beta,
                reason: "must be non-negative",
            });
        }
        self.strategy.validate(self.dt)?;
        if let MemoryStrategy::PowerLaw { reset_interval: 1 } = self.strategy {
            // with one node per weight the newest field is merged into its
            // predecessor on every other step and the m = 0 term disappears
            return Err(Error::Invalid(
                "time marching needs a reset interval eta >= 2".into(),
            ));
        }
        FieldGrid::with_sources(self.shape()?, self.dx, &self.initial)?;
        Ok(())
    }

    /// `α Δt^γ / Δx²`, the coefficient in front of the memory sum.
    pub fn stability_number(&self) -> f64 {
        self.alpha * self.dt.powf(self.gamma) / (self.dx * self.dx)
    }

    /// Heuristic ceiling on [`SimConfig::stability_number`]: the classical
    /// FTCS limit for the grid's dimension.
    pub fn stability_limit(&self) -> f64 {
        if self.ny == 1 {
            0.5
        } else {
            0.25
        }
    }

    pub fn initial_field(&self) -> Result<FieldGrid> {
        FieldGrid::with_sources(self.shape()?, self.dx, &self.initial)
    }

    /// Same configuration with a different strategy.
    pub fn with_strategy(&self, strategy: MemoryStrategy) -> Self {
        Self {
            strategy,
            ..self.clone()
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value: v,
            reason: "must be positive and finite",
        })
    }
}

/// Weighted backward sum `Σ ψ(γ, k-i) w_i δ^i` over the given history.
pub fn memory_sum(
    history: &[(SummationTerm, &KernelField)],
    psi: &PsiTable,
    k: usize,
    shape: GridShape,
) -> Result<Vec<f64>> {
    if psi.max_lag() < k {
        return Err(Error::Contract(format!(
            "weight table covers lags up to {} but step {k} needs {k}",
            psi.max_lag()
        )));
    }
    let mut acc = vec![0.0; shape.len()];
    for (term, field) in history {
        if term.time_index > k {
            return Err(Error::Contract(format!(
                "history term at time {} lies after step {k}",
                term.time_index
            )));
        }
        if field.shape() != shape {
            return Err(Error::Contract("history field has the wrong shape".into()));
        }
        let w = psi[k - term.time_index] * term.multiplier as f64;
        if w == 0.0 {
            continue;
        }
        for (a, d) in acc.iter_mut().zip(field.data()) {
            *a += w * d;
        }
    }
    Ok(acc)
}

/// `u^k + c·sum - Δt β u^k` with the boundary reset to zero.
fn advance(u_k: &FieldGrid, sum: &[f64], cfg: &SimConfig) -> FieldGrid {
    let coeff = cfg.stability_number();
    let decay = cfg.dt * cfg.beta;
    let mut next = u_k.clone();
    for (u, s) in next.data_mut().iter_mut().zip(sum) {
        *u = *u + coeff * s - decay * *u;
    }
    next.apply_dirichlet();
    next
}

/// One time step from `u_k` given the history terms (including `δ^k`).
pub fn step(
    u_k: &FieldGrid,
    history: &[(SummationTerm, &KernelField)],
    psi: &PsiTable,
    cfg: &SimConfig,
    k: usize,
) -> Result<FieldGrid> {
    let sum = memory_sum(history, psi, k, u_k.shape())?;
    Ok(advance(u_k, &sum, cfg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(step, field)` pairs, ascending.
    pub snapshots: Vec<(usize, FieldGrid)>,
    pub final_field: FieldGrid,
    /// Most kernel fields retained at once.
    pub peak_nodes: usize,
    /// Most terms evaluated in a single backward sum.
    pub peak_terms: usize,
}

/// Per-step bookkeeping handed to observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepInfo {
    pub step: usize,
    pub nodes: usize,
    pub terms: usize,
}

pub fn run(cfg: &SimConfig) -> Result<Trajectory> {
    run_observed(cfg, |_| {})
}

/// Runs the simulation, calling `observe` after each step's history update.
pub fn run_observed(cfg: &SimConfig, mut observe: impl FnMut(StepInfo)) -> Result<Trajectory> {
    cfg.validate()?;
    let s = cfg.stability_number();
    if s > cfg.stability_limit() {
        log::warn!(
            "alpha*dt^gamma/dx^2 = {s} exceeds the heuristic limit {} for a {}D grid; the run may blow up",
            cfg.stability_limit(),
            if cfg.ny == 1 { 1 } else { 2 }
        );
    }
    let psi = PsiTable::new(cfg.gamma, cfg.steps)?;
    let mut u = cfg.initial_field()?;
    let mut store: HistoryStore<KernelField> = HistoryStore::new(&cfg.strategy, cfg.dt)?;
    let mut snapshots = Vec::new();
    if cfg.snapshot_every > 0 {
        snapshots.push((0, u.clone()));
    }
    let (mut peak_nodes, mut peak_terms) = (0, 0);

    for k in 0..cfg.steps {
        store.push(laplacian_kernel(&u))?;
        let (next, terms) = match cfg.strategy {
            MemoryStrategy::Smart { threshold } => {
                let (sum, used) = continuum::smart_memory_sum(
                    |t| store.get(t).expect("smart strategy keeps every field"),
                    &psi,
                    k,
                    cfg.dt,
                    threshold,
                    u.shape(),
                );
                (advance(&u, &sum, cfg), used)
            }
            _ => {
                let history = store.entries();
                (step(&u, &history, &psi, cfg, k)?, history.len())
            }
        };
        let nodes = store.footprint();
        peak_nodes = peak_nodes.max(nodes);
        peak_terms = peak_terms.max(terms);
        observe(StepInfo {
            step: k,
            nodes,
            terms,
        });
        if !next.is_finite() {
            return Err(Error::NonFinite {
                step: k + 1,
                last_max: u.max_abs(),
            });
        }
        u = next;
        if cfg.snapshot_every > 0 && (k + 1) % cfg.snapshot_every == 0 {
            snapshots.push((k + 1, u.clone()));
        }
    }

    Ok(Trajectory {
        snapshots,
        final_field: u,
        peak_nodes,
        peak_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(strategy: MemoryStrategy) -> SimConfig {
        SimConfig {
            gamma: 0.9,
            alpha: 1.0,
            beta: 0.0,
            dt: 1.0,
            dx: 10.0,
            nx: 20,
            ny: 20,
            steps: 60,
            initial: vec![PointSource::new(10, 10, 10.0)],
            strategy,
            snapshot_every: 0,
        }
    }

    #[test]
    fn zero_steps_returns_initial() {
        let cfg = SimConfig {
            steps: 0,
            ..base(MemoryStrategy::Full)
        };
        let t = run(&cfg).unwrap();
        assert_eq!(t.final_field, cfg.initial_field().unwrap());
    }

    #[test]
    fn pure_decay() {
        let cfg = SimConfig {
            alpha: 0.0,
            beta: 0.05,
            dt: 0.5,
            steps: 40,
            initial: vec![PointSource::new(5, 7, 3.0)],
            ..base(MemoryStrategy::Full)
        };
        let t = run(&cfg).unwrap();
        let want = 3.0 * (1.0f64 - 0.05 * 0.5).powi(40);
        assert!((t.final_field.get(5, 7) - want).abs() < 1e-14);
    }

    #[test]
    fn psi_table_too_short_is_a_contract_error() {
        let cfg = base(MemoryStrategy::Full);
        let u = cfg.initial_field().unwrap();
        let d = laplacian_kernel(&u);
        let psi = PsiTable::new(0.9, 2).unwrap();
        let term = SummationTerm {
            time_index: 0,
            multiplier: 1,
        };
        assert!(matches!(
            step(&u, &[(term, &d)], &psi, &cfg, 5),
            Err(Error::Contract(_))
        ));
        let late = SummationTerm {
            time_index: 3,
            multiplier: 1,
        };
        assert!(matches!(
            step(&u, &[(late, &d)], &psi, &cfg, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn step_leaves_input_and_boundary_alone() {
        let cfg = base(MemoryStrategy::Full);
        let u = cfg.initial_field().unwrap();
        let before = u.clone();
        let d = laplacian_kernel(&u);
        let psi = PsiTable::new(0.9, 4).unwrap();
        let term = SummationTerm {
            time_index: 0,
            multiplier: 1,
        };
        let next = step(&u, &[(term, &d)], &psi, &cfg, 0).unwrap();
        assert_eq!(u, before);
        for j in 0..20 {
            assert_eq!(next.get(j, 0), 0.0);
            assert_eq!(next.get(j, 19), 0.0);
            assert_eq!(next.get(0, j), 0.0);
            assert_eq!(next.get(19, j), 0.0);
        }
    }

    #[test]
    fn snapshots_are_periodic_and_start_at_zero() {
        let cfg = SimConfig {
            snapshot_every: 25,
            ..base(MemoryStrategy::Short { length: 10.0 })
        };
        let t = run(&cfg).unwrap();
        let steps: Vec<_> = t.snapshots.iter().map(|(k, _)| *k).collect();
        assert_eq!(steps, vec![0, 25, 50]);
    }

    #[test]
    fn unstable_run_reports_the_step() {
        let cfg = SimConfig {
            gamma: 0.8,
            dx: 0.2,
            steps: 2000,
            ..base(MemoryStrategy::Short { length: 5.0 })
        };
        match run(&cfg) {
            Err(Error::NonFinite { step, .. }) => assert!(step > 0 && step <= 2000),
            other => panic!("expected a non-finite abort, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig {
            gamma: 2.5,
            ..base(MemoryStrategy::Full)
        };
        assert!(matches!(bad.validate(), Err(Error::Domain { name: "gamma", .. })));
        let bad = base(MemoryStrategy::PowerLaw { reset_interval: 1 });
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            initial: vec![PointSource::new(0, 3, 1.0)],
            ..base(MemoryStrategy::Full)
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            dt: 0.0,
            ..base(MemoryStrategy::Full)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn observer_sees_every_step() {
        let cfg = base(MemoryStrategy::PowerLaw { reset_interval: 2 });
        let mut seen = Vec::new();
        let t = run_observed(&cfg, |info| seen.push(info)).unwrap();
        assert_eq!(seen.len(), 60);
        assert_eq!(seen.iter().map(|s| s.nodes).max(), Some(t.peak_nodes));
        assert!(seen.iter().all(|s| s.nodes == s.terms));
    }
}
