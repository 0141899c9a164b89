//! Real-lag extensions `Ψ(γ, r)` of the weights, and the memory term as a
//! quadrature over a curvature-adapted lag mesh.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{GridShape, KernelField};
use crate::special::{cos_pi, is_nonpositive_integer, ln_gamma_positive, ln_gamma_signed};
use crate::weights::{validate_gamma, PsiTable};

/// Piecewise-linear interpolation of the tabulated weights.
pub fn psi_linear(r: f64, table: &PsiTable) -> Result<f64> {
    let max = table.max_lag();
    if !(r >= 0.0 && r <= max as f64) {
        return Err(Error::Range { r, max });
    }
    let lo = r.floor();
    let i = lo as usize;
    let frac = r - lo;
    if frac == 0.0 {
        return Ok(table[i]);
    }
    Ok(table[i] + frac * (table[i + 1] - table[i]))
}

/// `Re{ (-1)^r Γ(2-γ) / (Γ(r+1) Γ(2-γ-r)) }` on the principal branch, i.e.
/// with `(-1)^r` read as `cos(πr)`.
///
/// Zero where `2-γ-r` hits a pole of `Γ`. At `γ = 2` the expression is a
/// ratio of poles: finite (and equal to one) at integer `r`, singular
/// elsewhere.
pub fn psi_gamma_real(gamma: f64, r: f64) -> Result<f64> {
    validate_gamma(gamma)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Range { r, max: usize::MAX });
    }
    let top = 2.0 - gamma;
    if is_nonpositive_integer(top) {
        return if r.fract() == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::Singular { gamma, r })
        };
    }
    let bottom = top - r;
    let Some((ln_bottom, sign_bottom)) = ln_gamma_signed(bottom) else {
        return Ok(0.0);
    };
    let (ln_top, sign_top) = ln_gamma_signed(top).expect("2 - gamma is positive here");
    let magnitude = (ln_top - ln_gamma_positive(r + 1.0) - ln_bottom).exp();
    Ok(cos_pi(r) * sign_top * sign_bottom * magnitude)
}

/// `P(r) / Q(r)` with `Q(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFit {
    pub gamma: f64,
    /// `p_0 ..= p_α`
    pub numerator: Vec<f64>,
    /// `q_0 ..= q_β`, with `q_0 = 1`.
    pub denominator: Vec<f64>,
}

impl RationalFit {
    pub fn num_order(&self) -> usize {
        self.numerator.len() - 1
    }

    pub fn den_order(&self) -> usize {
        self.denominator.len() - 1
    }

    /// Number of interpolation constraints, `α + β`.
    pub fn constraint_count(&self) -> usize {
        self.num_order() + self.den_order()
    }

    pub fn eval(&self, r: f64) -> f64 {
        horner(&self.numerator, r) / horner(&self.denominator, r)
    }

    /// `Ψ(m) - ψ(m)` at the constraint points `m = 0..=α+β`.
    pub fn residuals(&self, table: &PsiTable) -> Vec<f64> {
        (0..=self.constraint_count())
            .map(|m| self.eval(m as f64) - table[m])
            .collect()
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

const FIT_TOLERANCE: f64 = 1e-8;

/// Rational interpolant of orders `(alpha, beta)` through `ψ(γ, m)` for
/// `m = 0..=alpha+beta`, normalised so `q_0 = 1`.
///
/// Each constraint `P(m) - ψ_m Q(m) = 0` is linear in the unknowns
/// `p_0..p_α, q_1..q_β`, giving a square system.
pub fn fit_rational(gamma: f64, alpha: usize, beta: usize, table: &PsiTable) -> Result<RationalFit> {
    let fail = |reason: String| Error::FitFailure {
        gamma,
        alpha,
        beta,
        reason,
    };
    validate_gamma(gamma)?;
    if beta <= alpha {
        return Err(fail("denominator order must exceed numerator order".into()));
    }
    if gamma == 1.0 {
        return Err(fail("all weights past m = 0 vanish; the system is singular".into()));
    }
    if table.gamma() != gamma {
        return Err(fail(format!("table was built for gamma={}", table.gamma())));
    }
    let m_max = alpha + beta;
    if table.max_lag() < m_max {
        return Err(Error::Range {
            r: m_max as f64,
            max: table.max_lag(),
        });
    }

    let n = m_max + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for m in 0..n {
        let x = m as f64;
        let psi = table[m];
        for j in 0..=alpha {
            a[(m, j)] = x.powi(j as i32);
        }
        for j in 1..=beta {
            a[(m, alpha + j)] = -psi * x.powi(j as i32);
        }
        b[m] = psi;
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| fail("constraint matrix is singular".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(fail("solution is not finite".into()));
    }

    let numerator = sol.rows(0, alpha + 1).iter().copied().collect();
    let mut denominator = vec![1.0];
    denominator.extend(sol.rows(alpha + 1, beta).iter().copied());
    let fit = RationalFit {
        gamma,
        numerator,
        denominator,
    };

    if let Some(root) = denominator_root(&fit.denominator, m_max as f64) {
        return Err(Error::DenominatorRoot {
            gamma,
            alpha,
            beta,
            root,
            m: m_max,
        });
    }
    let worst = fit
        .residuals(table)
        .iter()
        .fold(0.0f64, |w, r| w.max(r.abs()));
    if worst.is_nan() || worst > FIT_TOLERANCE {
        return Err(fail(format!("constraint residual {worst:e} exceeds {FIT_TOLERANCE:e}")));
    }
    Ok(fit)
}

/// A real root of the polynomial in `[0, upper]`, if any. Uses the
/// companion-matrix eigenvalues, with a sign scan as a backstop for roots
/// the eigen-solver reports with a small imaginary part.
fn denominator_root(coeffs: &[f64], upper: f64) -> Option<f64> {
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree] == 0.0 {
        degree -= 1;
    }
    if degree == 0 {
        return None;
    }
    let lead = coeffs[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    let slack = 1e-12 * upper.max(1.0);
    for z in companion.complex_eigenvalues().iter() {
        let real_enough = z.im.abs() <= 1e-9 * z.re.abs().max(1.0);
        if real_enough && z.re >= -slack && z.re <= upper + slack {
            return Some(z.re);
        }
    }
    let samples = 4096;
    let mut prev = horner(coeffs, 0.0);
    for i in 1..=samples {
        let x = upper * i as f64 / samples as f64;
        let v = horner(coeffs, x);
        if v == 0.0 || v.signum() != prev.signum() {
            return Some(x);
        }
        prev = v;
    }
    None
}

/// Ordered lag abscissae `0 = r_0 < r_1 < … < r_q = k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryMesh {
    points: Vec<f64>,
}

impl MemoryMesh {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let ok = points.first() == Some(&0.0)
            && points.windows(2).all(|w| w[0] < w[1])
            && points.iter().all(|p| p.is_finite());
        if !ok {
            return Err(Error::Invalid(
                "mesh must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Every integer lag `0..=k`.
    pub fn full(k: usize) -> Self {
        Self {
            points: (0..=k).map(|m| m as f64).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.points.last().expect("mesh is never empty")
    }
}

/// Keeps lag `r` when `curvature(r) >= threshold`; lags `0`, `1` and `k` are
/// always kept. `curvature` is only queried for `1..k`.
fn mesh_from_curvature(k: usize, threshold: f64, mut curvature: impl FnMut(usize) -> f64) -> Vec<usize> {
    let mut lags = vec![0];
    for r in 1..k {
        if r == 1 || curvature(r) >= threshold {
            lags.push(r);
        }
    }
    if k >= 1 {
        lags.push(k);
    }
    lags
}

/// Drops integer lags where the history function `g(r) = Ψ(γ, r) f(u_{k-r})`
/// is nearly straight: a lag survives if its central second difference,
/// scaled to time units by `dt²`, is at least `threshold`.
pub fn build_mesh(history: impl Fn(f64) -> f64, k: usize, dt: f64, threshold: f64) -> MemoryMesh {
    let inv_dt2 = 1.0 / (dt * dt);
    let g: Vec<f64> = (0..=k).map(|m| history(m as f64)).collect();
    let lags = mesh_from_curvature(k, threshold, |r| {
        ((g[r + 1] - 2.0 * g[r] + g[r - 1]) * inv_dt2).abs()
    });
    MemoryMesh {
        points: lags.into_iter().map(|m| m as f64).collect(),
    }
}

/// Unit-spaced sub-points of the cell `[a, b)` with their widths and
/// linear-interpolation weight toward `b`.
fn cell_points(a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64)> {
    let span = b - a;
    let count = span.ceil() as usize;
    (0..count).map(move |j| {
        let r = a + j as f64;
        let width = (b - r).min(1.0);
        (r, width, (r - a) / span)
    })
}

/// `∫ Ψ(γ, r) f(r) dr` over the mesh, in lag units.
///
/// Each cell `[r_i, r_{i+1})` is summed on its unit lattice with `Ψ`
/// evaluated directly and the history interpolated linearly between the
/// two stored ends; the last mesh point contributes one unit cell of its
/// own. On the full integer mesh this is exactly the discrete
/// Grünwald-Letnikov sum `Σ_m Ψ(m) f(m)`.
pub fn memory_integral(
    psi_cont: impl Fn(f64) -> f64,
    history: impl Fn(f64) -> f64,
    mesh: &MemoryMesh,
) -> f64 {
    let pts = mesh.points();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (history(a), history(b));
        for (r, width, t) in cell_points(a, b) {
            let f = if t == 0.0 { fa } else { fa + t * (fb - fa) };
            total += psi_cont(r) * f * width;
        }
    }
    let last = mesh.last();
    total + psi_cont(last) * history(last)
}

/// Fieldwise memory term for the experimental smart strategy.
///
/// The mesh keeps a lag when the largest second difference over the grid
/// of `ψ(r) δ^{k-r}` reaches `threshold`; the quadrature is the one used by
/// [`memory_integral`] with `Ψ` the linear interpolant of `psi`. Returns
/// the summed field and the number of mesh points used.
pub fn smart_memory_sum<'a>(
    field_at: impl Fn(usize) -> &'a KernelField,
    psi: &PsiTable,
    k: usize,
    dt: f64,
    threshold: f64,
    shape: GridShape,
) -> (Vec<f64>, usize) {
    let inv_dt2 = 1.0 / (dt * dt);
    let lag_field = |r: usize| field_at(k - r).data();
    let lags = mesh_from_curvature(k, threshold, |r| {
        let (w0, w1, w2) = (psi[r - 1], psi[r], psi[r + 1]);
        let (f0, f1, f2) = (lag_field(r - 1), lag_field(r), lag_field(r + 1));
        let mut worst = 0.0f64;
        for i in 0..f1.len() {
            let d2 = w2 * f2[i] - 2.0 * w1 * f1[i] + w0 * f0[i];
            worst = worst.max(d2.abs());
        }
        worst * inv_dt2
    });

    let mut acc = vec![0.0; shape.len()];
    let mut axpy = |c: f64, field: &[f64]| {
        if c != 0.0 {
            for (a, v) in acc.iter_mut().zip(field) {
                *a += c * v;
            }
        }
    };
    for w in lags.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b - a) as f64;
        // Σ_j ψ(a+j) [(1 - t_j) f(a) + t_j f(b)] with t_j = j / span
        let (mut ca, mut cb) = (0.0, 0.0);
        for j in 0..b - a {
            let t = j as f64 / span;
            ca += psi[a + j] * (1.0 - t);
            cb += psi[a + j] * t;
        }
        axpy(ca, lag_field(a));
        axpy(cb, lag_field(b));
    }
    let last = *lags.last().expect("mesh always holds lag 0");
    axpy(psi[last], lag_field(last));
    (acc, lags.len())
}
