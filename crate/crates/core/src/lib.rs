//! Explicit finite-difference solver for the time-fractional diffusion
//! equation with Grünwald-Letnikov memory, and several ways of truncating
//! or compressing that memory.

pub mod continuum;
pub mod error;
pub mod lattice;
pub mod marcher;
pub mod memory;
pub mod special;
pub mod sweep;
pub mod weights;

pub use error::{Error, Result};
pub use lattice::{fmt_real, laplacian_kernel, FieldGrid, GridShape, KernelField, PointSource};
pub use marcher::{run, run_observed, SimConfig, StepInfo, Trajectory};
pub use memory::{HistoryStore, MemoryStrategy, SummationTerm};
pub use sweep::{reference_run, sweep, BenchRecord, SweepOptions};
pub use weights::{psi_direct, psi_table, PsiTable};
