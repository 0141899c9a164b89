//! History-memory strategies for the backward Grünwald-Letnikov sum.
//!
//! A strategy decides which stored kernel fields enter the sum at step `k`,
//! with what integer multiplier, and which fields must be kept around for
//! later steps.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};

pub mod arithmetic;
pub mod powerlaw;

pub use arithmetic::{arithmetic_sample_points, arithmetic_term_count, LagSample};
pub use powerlaw::{powerlaw_insert, PowerLawStore, WeightedNode};

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryStrategy {
    /// Every past step, multiplier one.
    Full,
    /// Only the most recent `length` time units.
    Short { length: f64 },
    /// Arithmetic-sequence sampling with base interval `base`.
    Arithmetic { base: usize },
    /// Power-law condensing store with `reset_interval` nodes per weight.
    PowerLaw { reset_interval: usize },
    /// Experimental: curvature-thresholded mesh over the continuous memory
    /// integral. Keeps the whole history.
    Smart { threshold: f64 },
}

impl MemoryStrategy {
    pub fn tag(&self) -> &'static str {
        match self {
            MemoryStrategy::Full => "full",
            MemoryStrategy::Short { .. } => "short",
            MemoryStrategy::Arithmetic { .. } => "arithmetic",
            MemoryStrategy::PowerLaw { .. } => "powerlaw",
            MemoryStrategy::Smart { .. } => "smart",
        }
    }

    /// The strategy's tuning parameter, if it has one.
    pub fn param(&self) -> Option<f64> {
        match *self {
            MemoryStrategy::Full => None,
            MemoryStrategy::Short { length } => Some(length),
            MemoryStrategy::Arithmetic { base } => Some(base as f64),
            MemoryStrategy::PowerLaw { reset_interval } => Some(reset_interval as f64),
            MemoryStrategy::Smart { threshold } => Some(threshold),
        }
    }

    /// Position in the canonical output order.
    pub fn rank(&self) -> u8 {
        match self {
            MemoryStrategy::Full => 0,
            MemoryStrategy::Short { .. } => 1,
            MemoryStrategy::Arithmetic { .. } => 2,
            MemoryStrategy::PowerLaw { .. } => 3,
            MemoryStrategy::Smart { .. } => 4,
        }
    }

    /// Checks parameters against the time step they will run with.
    pub fn validate(&self, dt: f64) -> Result<()> {
        match *self {
            MemoryStrategy::Full => Ok(()),
            MemoryStrategy::Short { length } => {
                if !(length > 0.0 && length.is_finite()) {
                    return Err(Error::Domain {
                        name: "L",
                        value: length,
                        reason: "memory length must be positive",
                    });
                }
                if window_lags(length, dt) < 1 {
                    return Err(Error::Domain {
                        name: "L",
                        value: length,
                        reason: "memory length must cover at least one time step",
                    });
                }
                Ok(())
            }
            MemoryStrategy::Arithmetic { base } => arithmetic::validate_base(base),
            MemoryStrategy::PowerLaw { reset_interval } => {
                if reset_interval == 0 {
                    return Err(Error::Invalid("reset interval eta must be at least 1".into()));
                }
                Ok(())
            }
            MemoryStrategy::Smart { threshold } => {
                if !(threshold >= 0.0 && threshold.is_finite()) {
                    return Err(Error::Domain {
                        name: "threshold",
                        value: threshold,
                        reason: "must be non-negative",
                    });
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for MemoryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.tag()),
            None => f.write_str(self.tag()),
        }
    }
}

/// One entry of the backward sum: the stored field at `time_index`,
/// weighted by `ψ(γ, k - time_index) * multiplier`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummationTerm {
    pub time_index: usize,
    pub multiplier: u64,
}

/// `floor(L / dt)`, tolerant of quotients that land a rounding error below
/// an integer (0.3 / 0.1 and the like).
pub fn window_lags(length: f64, dt: f64) -> usize {
    let q = length / dt;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        q.floor() as usize
    }
}

/// Lags summed by the short-memory rule at step `k`.
pub fn short_window(length: f64, dt: f64, k: usize) -> RangeInclusive<usize> {
    0..=window_lags(length, dt).min(k)
}

enum Store<T> {
    /// Contiguous run of the most recent fields, `first` being the time index
    /// of the front. `keep` caps how many are retained.
    Dense {
        first: usize,
        fields: VecDeque<T>,
        keep: Option<usize>,
    },
    PowerLaw(PowerLawStore<T>),
}

/// The history of kernel fields as seen by one strategy. Time indices are
/// assigned in push order starting from zero.
pub struct HistoryStore<T> {
    strategy: MemoryStrategy,
    store: Store<T>,
    pushed: usize,
}

impl<T> HistoryStore<T> {
    pub fn new(strategy: &MemoryStrategy, dt: f64) -> Result<Self> {
        strategy.validate(dt)?;
        let store = match *strategy {
            MemoryStrategy::PowerLaw { reset_interval } => {
                Store::PowerLaw(PowerLawStore::new(reset_interval)?)
            }
            MemoryStrategy::Short { length } => Store::Dense {
                first: 0,
                fields: VecDeque::new(),
                keep: Some(window_lags(length, dt) + 1),
            },
            _ => Store::Dense {
                first: 0,
                fields: VecDeque::new(),
                keep: None,
            },
        };
        Ok(Self {
            strategy: strategy.clone(),
            store,
            pushed: 0,
        })
    }

    pub fn strategy(&self) -> &MemoryStrategy {
        &self.strategy
    }

    /// Time index of the most recent push.
    pub fn current_step(&self) -> Option<usize> {
        self.pushed.checked_sub(1)
    }

    /// Records the field of the next time step and releases whatever the
    /// strategy will never read again.
    pub fn push(&mut self, field: T) -> Result<()> {
        let k = self.pushed;
        match &mut self.store {
            Store::Dense {
                first,
                fields,
                keep,
            } => {
                fields.push_back(field);
                if let Some(keep) = *keep {
                    while fields.len() > keep {
                        fields.pop_front();
                        *first += 1;
                    }
                }
            }
            Store::PowerLaw(store) => store.push(k, field)?,
        }
        self.pushed += 1;
        Ok(())
    }

    /// Field stored for `time_index`, if still retained.
    pub fn get(&self, time_index: usize) -> Option<&T> {
        match &self.store {
            Store::Dense { first, fields, .. } => {
                time_index.checked_sub(*first).and_then(|i| fields.get(i))
            }
            Store::PowerLaw(store) => store
                .iter_newest_first()
                .find(|n| n.time_index == time_index)
                .map(|n| &n.field),
        }
    }

    /// Terms of the backward sum for the current step, ordered by
    /// increasing lag. Empty before the first push.
    pub fn terms(&self) -> Vec<SummationTerm> {
        let Some(k) = self.current_step() else {
            return Vec::new();
        };
        let unit = |lag: usize| SummationTerm {
            time_index: k - lag,
            multiplier: 1,
        };
        match (&self.strategy, &self.store) {
            (_, Store::PowerLaw(store)) => store
                .iter_newest_first()
                .map(|n| SummationTerm {
                    time_index: n.time_index,
                    multiplier: n.weight,
                })
                .collect(),
            (MemoryStrategy::Arithmetic { base }, _) => arithmetic_sample_points(*base, k)
                .expect("base validated at construction")
                .into_iter()
                .map(|s| SummationTerm {
                    time_index: k - s.lag,
                    multiplier: s.multiplier,
                })
                .collect(),
            (_, Store::Dense { first, .. }) => (0..=k - first).map(unit).collect(),
        }
    }

    /// [`terms`](Self::terms) paired with the stored fields they read.
    pub fn entries(&self) -> Vec<(SummationTerm, &T)> {
        match &self.store {
            Store::PowerLaw(store) => store
                .iter_newest_first()
                .map(|n| {
                    let term = SummationTerm {
                        time_index: n.time_index,
                        multiplier: n.weight,
                    };
                    (term, &n.field)
                })
                .collect(),
            Store::Dense { first, fields, .. } => self
                .terms()
                .into_iter()
                .map(|t| (t, &fields[t.time_index - first]))
                .collect(),
        }
    }

    /// Number of fields currently retained.
    pub fn footprint(&self) -> usize {
        match &self.store {
            Store::Dense { fields, .. } => fields.len(),
            Store::PowerLaw(store) => store.len(),
        }
    }

    /// Node count per weight: condensed weights for the power-law store,
    /// term multipliers otherwise.
    pub fn weight_histogram(&self) -> BTreeMap<u64, usize> {
        match &self.store {
            Store::PowerLaw(store) => store.weight_histogram(),
            Store::Dense { .. } => {
                let mut hist = BTreeMap::new();
                for t in self.terms() {
                    *hist.entry(t.multiplier).or_insert(0) += 1;
                }
                hist
            }
        }
    }
}

/// Terms the power-law store contributes at step `k`. The store must hold
/// time points up to and including `k`.
pub fn powerlaw_terms<T>(store: &PowerLawStore<T>) -> Vec<SummationTerm> {
    store
        .iter_newest_first()
        .map(|n| SummationTerm {
            time_index: n.time_index,
            multiplier: n.weight,
        })
        .collect()
}

/// Retained field count for `strategy` after steps `0..=k` have been
/// recorded, computed without running a store (the power-law count is
/// obtained by replaying insertions).
pub fn footprint(strategy: &MemoryStrategy, dt: f64, k: usize) -> Result<usize> {
    strategy.validate(dt)?;
    Ok(match *strategy {
        MemoryStrategy::Short { length } => window_lags(length, dt).min(k) + 1,
        MemoryStrategy::PowerLaw { reset_interval } => {
            let mut store = PowerLawStore::new(reset_interval)?;
            for i in 0..=k {
                store.push(i, ())?;
            }
            store.len()
        }
        _ => k + 1,
    })
}
