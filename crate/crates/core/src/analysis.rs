//! Separation diagnostics for solutions that start at the same value with
//! different slopes. If `ã_*` and `ã^*` bound the difference quotients
//! `(f(τ, y₁ + u) − f(τ, y₁)) / u` along a base solution `y₁`, then
//!
//! ```text
//! d·t·E_{α,2}(ã_* t^α)  ≤  y₂(t) − y₁(t)  ≤  d·t·E_{α,2}(ã^* t^α),   d = y₂'(0) − y₁'(0) ≥ 0.
//! ```
//!
//! The lower bound stays positive up to the first zero of `E_{α,2}(ã_* t^α)`,
//! which gives a horizon on which the boundary value problem has at most one
//! solution. The quotient bounds are sampled, so everything here is an
//! estimate.

use serde::Serialize;
use thiserror::Error;

use crate::ivp::{solve_ivp, GridConfig, IvpError, IvpProblem, Trajectory};
use crate::mlf::{mittag_leffler, rgamma, MlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error("right-hand side is not finite at t = {t}, y = {y}")]
    NonFiniteRhs { t: f64, y: f64 },
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Ivp(#[from] IvpError),
    #[error("E_{{{alpha},2}}(-x) has no sign change for x in (0, {limit:e}]")]
    NoSignChange { alpha: f64, limit: f64 },
    #[error("the two problems coincide; their solutions never separate")]
    IdenticalProblems,
    #[error("problems must differ only in the initial slope: {0}")]
    Mismatch(String),
    #[error("no intersection on [0, {horizon}]")]
    NoIntersection { horizon: f64 },
}

/// Sampled bounds on the difference quotients of `f` in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeRange {
    pub a_lower: f64,
    pub a_upper: f64,
}

impl SlopeRange {
    /// Pushes both ends outward by `fraction` of their magnitudes.
    pub fn widen(self, fraction: f64) -> SlopeRange {
        SlopeRange {
            a_lower: self.a_lower - fraction * self.a_lower.abs(),
            a_upper: self.a_upper + fraction * self.a_upper.abs(),
        }
    }
}

/// Minimum and maximum of `(f(τ, y₁(τ) + u) − f(τ, y₁(τ))) / u` over the
/// trajectory nodes `τ` and offsets `u = ±window·k/samples`, `k = 1..=samples`.
/// An estimate of the true infimum/supremum, not a bound.
pub fn estimate_slope_range<F: Fn(f64, f64) -> f64>(
    rhs: &F,
    base: &Trajectory,
    y_window: f64,
    samples: usize,
) -> Result<SlopeRange, AnalysisError> {
    if !(y_window > 0.0 && y_window.is_finite()) {
        return Err(AnalysisError::BadArgument(format!(
            "window must be positive, got {y_window}"
        )));
    }
    if samples == 0 {
        return Err(AnalysisError::BadArgument(
            "need at least one sample".into(),
        ));
    }
    let eval = |t: f64, y: f64| {
        let v = rhs(t, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(AnalysisError::NonFiniteRhs { t, y })
        }
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&t, &y) in base.times.iter().zip(&base.values) {
        let f0 = eval(t, y)?;
        for k in 1..=samples {
            let u = y_window * k as f64 / samples as f64;
            for du in [u, -u] {
                let q = (eval(t, y + du)? - f0) / du;
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    }
    Ok(SlopeRange {
        a_lower: lo,
        a_upper: hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationEstimate {
    pub a_lower: f64,
    pub a_upper: f64,
    pub t: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Both sides of the separation estimate at time `t` for slope gap `slope_diff`.
pub fn separation_bounds(
    alpha: f64,
    slope_diff: f64,
    t: f64,
    range: SlopeRange,
) -> Result<SeparationEstimate, AnalysisError> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(AnalysisError::BadArgument(format!(
            "order {alpha} outside (1, 2)"
        )));
    }
    if !(slope_diff >= 0.0) || !(t >= 0.0) {
        return Err(AnalysisError::BadArgument(format!(
            "need slope difference >= 0 and t >= 0, got {slope_diff} and {t}"
        )));
    }
    if range.a_lower > range.a_upper {
        return Err(AnalysisError::BadArgument("a_lower exceeds a_upper".into()));
    }
    let ta = t.powf(alpha);
    let side = |a: f64| -> Result<f64, AnalysisError> {
        if slope_diff == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        Ok(slope_diff * t * mittag_leffler(alpha, 2.0, a * ta)?)
    };
    Ok(SeparationEstimate {
        a_lower: range.a_lower,
        a_upper: range.a_upper,
        t,
        lower_bound: side(range.a_lower)?,
        upper_bound: side(range.a_upper)?,
    })
}

/// Scan limit for the first zero of `E_{α,2}(−x)`.
pub const ZERO_SEARCH_LIMIT: f64 = 1e6;

/// Smallest positive zero of `E_{α,2}(−x)`.
pub fn first_zero_of_ml2(alpha: f64) -> Result<f64, AnalysisError> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(AnalysisError::BadArgument(format!(
            "order {alpha} outside (1, 2)"
        )));
    }
    let e = |x: f64| mittag_leffler(alpha, 2.0, -x);
    // For large x, E_{α,2}(−x) = 1/(x Γ(2−α)) + O(x^-2) plus oscillating
    // terms of size ~ (2/α) x^{-1/α} exp(x^{1/α} cos(π/α)). Once those are far
    // below the algebraic part no further sign change can occur.
    let tail = rgamma(2.0 - alpha);
    let decay = (std::f64::consts::PI / alpha).cos();
    let mut a = 0.0;
    let mut fa = e(a)?;
    while a < ZERO_SEARCH_LIMIT {
        // a fraction of the local oscillation period 2πα x^{1-1/α}/sin(π/α)
        let step = 0.05 * a.max(1.0).powf(1.0 - 1.0 / alpha);
        let b = (a + step).min(ZERO_SEARCH_LIMIT);
        let fb = e(b)?;
        if fb == 0.0 {
            return Ok(b);
        }
        if fa.signum() != fb.signum() {
            return bisect(&e, a, b, fa);
        }
        let wave = 2.0 / alpha * b.powf(-1.0 / alpha) * (b.powf(1.0 / alpha) * decay).exp();
        if b > 1.0 && wave < 1e-3 * tail / b {
            break;
        }
        a = b;
        fa = fb;
    }
    Err(AnalysisError::NoSignChange {
        alpha,
        limit: ZERO_SEARCH_LIMIT,
    })
}

fn bisect<E>(e: &E, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64, AnalysisError>
where
    E: Fn(f64) -> Result<f64, MlError>,
{
    while b - a > 1e-10 * b.max(1.0) {
        let m = 0.5 * (a + b);
        let fm = e(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Largest `t` for which the lower separation bound is guaranteed positive:
/// `+∞` for `a_lower ≥ 0`, else `(x*/|a_lower|)^{1/α}` with `x*` the first
/// zero of `E_{α,2}(−x)`.
pub fn uniqueness_horizon(alpha: f64, a_lower: f64) -> Result<f64, AnalysisError> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(AnalysisError::BadArgument(format!(
            "order {alpha} outside (1, 2)"
        )));
    }
    if a_lower.is_nan() {
        return Err(AnalysisError::BadArgument("a_lower is NaN".into()));
    }
    if a_lower >= 0.0 {
        return Ok(f64::INFINITY);
    }
    let x = first_zero_of_ml2(alpha)?;
    Ok((x / a_lower.abs()).powf(1.0 / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intersection {
    pub t_star: f64,
    pub y_star: f64,
    /// Grid index of the node just after the crossing.
    pub node: usize,
}

/// First crossing of two solutions that share all data but the initial slope.
pub fn find_intersection<F1, F2>(
    p1: &IvpProblem<F1>,
    p2: &IvpProblem<F2>,
    grid: &GridConfig,
) -> Result<Intersection, AnalysisError>
where
    F1: Fn(f64, f64) -> f64,
    F2: Fn(f64, f64) -> f64,
{
    if p1.alpha() != p2.alpha() || p1.horizon() != p2.horizon() || p1.y0() != p2.y0() {
        return Err(AnalysisError::Mismatch(format!("{p1:?} vs {p2:?}")));
    }
    if p1.y0prime() == p2.y0prime() {
        return Err(AnalysisError::IdenticalProblems);
    }
    let a = solve_ivp(p1, grid)?;
    let b = solve_ivp(p2, grid)?;
    crossing(&a, &b).ok_or(AnalysisError::NoIntersection {
        horizon: p1.horizon(),
    })
}

/// First sign change of `a − b` after the shared starting node.
pub fn crossing(a: &Trajectory, b: &Trajectory) -> Option<Intersection> {
    let d = |j: usize| a.values[j] - b.values[j];
    let n = a.values.len().min(b.values.len());
    if n < 2 {
        return None;
    }
    let side = d(1).signum();
    if d(1) == 0.0 {
        return None;
    }
    for j in 2..n {
        let dj = d(j);
        if dj == 0.0 || dj.signum() != side {
            let dp = d(j - 1);
            let theta = dp / (dp - dj);
            let t_star = a.times[j - 1] + theta * (a.times[j] - a.times[j - 1]);
            let ya = a.values[j - 1] + theta * (a.values[j] - a.values[j - 1]);
            let yb = b.values[j - 1] + theta * (b.values[j] - b.values[j - 1]);
            return Some(Intersection {
                t_star,
                y_star: 0.5 * (ya + yb),
                node: j,
            });
        }
    }
    None
}
