//! Grünwald-Letnikov weights `ψ(γ, m) = (-1)^m C(1-γ, m)`.
//!
//! [`PsiTable`] is built with the one-term recursion, which is the production
//! path. [`psi_direct`] evaluates the closed gamma-function form in log space
//! and serves as an independent check on the table.

use crate::error::{Error, Result};
use crate::special::{is_nonpositive_integer, ln_gamma_positive, ln_gamma_signed};

/// Checks that an order parameter lies in `(0, 2]`.
pub fn validate_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 2.0) {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            reason: "must lie in (0, 2]",
        });
    }
    if gamma == 2.0 {
        log::warn!("gamma = 2 is the wave-equation limit; it lies outside the validated diffusion range");
    }
    Ok(())
}

/// One step of the recursion: `ψ(γ, m)` from `ψ(γ, m-1)`.
#[inline]
pub fn psi_next(prev: f64, gamma: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    let m = m as f64;
    -prev * (2.0 - gamma - m) / m
}

/// Precomputed `ψ(γ, 0..=n)`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    gamma: f64,
    values: Vec<f64>,
}

impl PsiTable {
    pub fn new(gamma: f64, n: usize) -> Result<Self> {
        validate_gamma(gamma)?;
        let mut values = Vec::with_capacity(n + 1);
        values.push(1.0);
        for m in 1..=n {
            let prev = values[m - 1];
            values.push(psi_next(prev, gamma, m));
        }
        Ok(Self { gamma, values })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest lag covered by the table.
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    #[inline]
    pub fn get(&self, m: usize) -> Option<f64> {
        self.values.get(m).copied()
    }

    /// Partial sum `Σ_{m=0}^{n} ψ(γ, m)`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.values[..=n.min(self.max_lag())].iter().sum()
    }
}

impl std::ops::Index<usize> for PsiTable {
    type Output = f64;

    fn index(&self, m: usize) -> &f64 {
        &self.values[m]
    }
}

/// Convenience wrapper around [`PsiTable::new`].
pub fn psi_table(gamma: f64, n: usize) -> Result<PsiTable> {
    PsiTable::new(gamma, n)
}

/// `ψ(γ, m) = (-1)^m Γ(2-γ) / (m! Γ(2-γ-m))` evaluated through log-gamma with
/// the sign carried separately. Poles of the denominator give 0.
pub fn psi_direct(gamma: f64, m: usize) -> f64 {
    let top = 2.0 - gamma;
    if is_nonpositive_integer(top) {
        // Γ(z)/Γ(z-m) → (-1)^m m! as z → 0, so the weight is exactly one
        // (γ = 2 is the only such order in range).
        return 1.0;
    }
    let bottom = top - m as f64;
    let Some((ln_bottom, sign_bottom)) = ln_gamma_signed(bottom) else {
        return 0.0;
    };
    let Some((ln_top, sign_top)) = ln_gamma_signed(top) else {
        return 0.0;
    };
    let ln_fact = ln_gamma_positive(m as f64 + 1.0);
    let parity = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    parity * sign_top * sign_bottom * (ln_top - ln_fact - ln_bottom).exp()
}
