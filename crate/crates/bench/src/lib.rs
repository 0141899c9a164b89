//! Shared configurations for the criterion benchmarks.

use fracmem_core::{MemoryStrategy, PointSource, SimConfig};

/// The 20x20 point-source problem the strategy comparison is built around,
/// shortened to `steps`.
pub fn point_source_2d(gamma: f64, steps: usize) -> SimConfig {
    SimConfig {
        gamma,
        alpha: 1.0,
        beta: 0.0,
        dt: 1.0,
        dx: 10.0,
        nx: 20,
        ny: 20,
        steps,
        initial: vec![PointSource::new(10, 10, 10.0)],
        strategy: MemoryStrategy::Full,
        snapshot_every: 0,
    }
}

/// A long 1D run where history length dominates the cost.
pub fn long_1d(gamma: f64, steps: usize) -> SimConfig {
    SimConfig {
        gamma,
        alpha: 1.0,
        beta: 0.0,
        dt: 1.0,
        dx: 2.0,
        nx: 21,
        ny: 1,
        steps,
        initial: vec![PointSource::new(10, 0, 1.0)],
        strategy: MemoryStrategy::Full,
        snapshot_every: 0,
    }
}

/// One representative setting of each strategy.
pub fn strategies() -> Vec<MemoryStrategy> {
    vec![
        MemoryStrategy::Full,
        MemoryStrategy::Short { length: 100.0 },
        MemoryStrategy::Arithmetic { base: 10 },
        MemoryStrategy::PowerLaw { reset_interval: 3 },
        MemoryStrategy::Smart { threshold: 1e-6 },
    ]
}
