//! Arithmetic-sequence sampling of the backward sum.
//!
//! Lags `0..=a` are summed individually. Interval `i >= 2` spans lags
//! `a^(i-1)+1 ..= a^i` and is walked in increments of `2i - 1` consecutive
//! lags; each increment is represented by its median lag with a multiplier
//! equal to the number of lags it stands for. The last increment of an
//! interval is clamped to the interval end. An increment is only used if
//! it ends strictly before the oldest lag `k`; every lag past the last used
//! increment is summed individually.

use crate::error::{Error, Result};

/// One sampled lag of the backward sum and the number of lags it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagSample {
    pub lag: usize,
    pub multiplier: u64,
}

impl LagSample {
    /// The inclusive lag range this sample represents.
    pub fn span(&self) -> (usize, usize) {
        let below = (self.multiplier as usize - 1) / 2;
        let lo = self.lag - below;
        (lo, lo + self.multiplier as usize - 1)
    }
}

pub fn validate_base(a: usize) -> Result<()> {
    if a < 2 {
        return Err(Error::Invalid(format!(
            "arithmetic base interval a = {a}: must be at least 2"
        )));
    }
    Ok(())
}

/// Sampled lags, ascending, for the step that currently sits `k` steps
/// after the initial condition.
pub fn arithmetic_sample_points(a: usize, k: usize) -> Result<Vec<LagSample>> {
    validate_base(a)?;
    let base_end = a.min(k);
    let mut out: Vec<LagSample> = (0..=base_end)
        .map(|lag| LagSample { lag, multiplier: 1 })
        .collect();
    if k <= a {
        return Ok(out);
    }

    let mut next = a + 1;
    let mut i = 2u32;
    'intervals: loop {
        let hi = a.checked_pow(i).unwrap_or(usize::MAX);
        let width = 2 * i as usize - 1;
        while next <= hi {
            let end = next.saturating_add(width - 1).min(hi);
            if end >= k {
                break 'intervals;
            }
            let count = end - next + 1;
            out.push(LagSample {
                lag: next + (count - 1) / 2,
                multiplier: count as u64,
            });
            next = end + 1;
        }
        i += 1;
    }
    out.extend((next..=k).map(|lag| LagSample { lag, multiplier: 1 }));
    Ok(out)
}

/// Number of terms the arithmetic sampler evaluates at step `k`.
pub fn arithmetic_term_count(a: usize, k: usize) -> Result<usize> {
    Ok(arithmetic_sample_points(a, k)?.len())
}
