//! Log-gamma with explicit sign tracking, plus exact-period trigonometry.
//!
//! `ln|Γ(x)|` is evaluated with the Stirling series for `x >= 15`, an upward
//! recurrence for smaller positive arguments and the reflection formula for
//! negative ones. The sign of `Γ(x)` is returned separately so that ratios
//! of huge gamma values can be formed in log space.

use std::f64::consts::PI;

const STIRLING_CUTOFF: f64 = 15.0;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

// B_{2n} / (2n (2n-1)) for n = 1..=7
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

/// `ln|Γ(x)|` and the sign of `Γ(x)`. Returns `None` at the poles
/// (zero and the negative integers) and for non-finite input.
pub fn ln_gamma_signed(x: f64) -> Option<(f64, f64)> {
    if !x.is_finite() || is_nonpositive_integer(x) {
        return None;
    }
    if x > 0.0 {
        return Some((ln_gamma_positive(x), 1.0));
    }
    // Γ(x) Γ(1-x) = π / sin(πx)
    let s = sin_pi(x);
    let ln = PI.ln() - s.abs().ln() - ln_gamma_positive(1.0 - x);
    Some((ln, s.signum()))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma_positive(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x.fract() == 0.0 && x <= 171.0 {
        // (x-1)! is exact in f64 up to 22!, and correctly rounded well past it
        let fact = (2..x as u32).fold(1.0f64, |acc, n| acc * n as f64);
        return fact.ln();
    }
    if x >= STIRLING_CUTOFF {
        return stirling(x);
    }
    let mut shifted = x;
    let mut product = 1.0;
    while shifted < STIRLING_CUTOFF {
        product *= shifted;
        shifted += 1.0;
    }
    stirling(shifted) - product.ln()
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut power = inv;
    for c in STIRLING {
        series += c * power;
        power *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

/// `Γ(x)` through the log route; infinite at poles.
pub fn gamma(x: f64) -> f64 {
    match ln_gamma_signed(x) {
        Some((ln, sign)) => sign * ln.exp(),
        None => f64::INFINITY,
    }
}

/// `1/Γ(x)`, which is entire: exactly zero at the poles of `Γ`.
pub fn recip_gamma(x: f64) -> f64 {
    match ln_gamma_signed(x) {
        Some((ln, sign)) => sign * (-ln).exp(),
        None if x.is_finite() => 0.0,
        None => f64::NAN,
    }
}

pub fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Reduces `x` modulo 2 into `[-1, 1]`. Exact in binary floating point.
fn reduce_period2(x: f64) -> f64 {
    let r = x % 2.0;
    if r > 1.0 {
        r - 2.0
    } else if r < -1.0 {
        r + 2.0
    } else {
        r
    }
}

/// `sin(πx)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = reduce_period2(x);
    if r.fract() == 0.0 {
        return 0.0;
    }
    // fold onto [-1/2, 1/2] where sin is well conditioned
    let folded = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * folded).sin()
}

/// `cos(πx)`, exactly ±1 at integers and exactly zero at half-integers.
pub fn cos_pi(x: f64) -> f64 {
    let r = reduce_period2(x).abs();
    if r == 0.5 {
        return 0.0;
    }
    if r.fract() == 0.0 {
        return if r == 0.0 { 1.0 } else { -1.0 };
    }
    if r > 0.5 {
        -sin_pi(r - 0.5)
    } else {
        sin_pi(0.5 - r)
    }
}
