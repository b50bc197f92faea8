//! Quadrature weights for the two IVP schemes.

use crate::fastconv::ConvolutionPlan;
use crate::mlf::gamma;

use super::IvpError;

/// BDF2 convolution quadrature weights with starting-weight corrections.
///
/// The fractional integral at `t_n` is approximated by
/// `h^α (Σ_{j=0}^{n} omega[n-j] f_j + Σ_{j=0}^{2} start_weights[n][j] f_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqWeights {
    pub alpha: f64,
    pub omega: Vec<f64>,
    /// Row `n` corrects the quadrature at `t_n`; row 0 is all zeros.
    pub start_weights: Vec<[f64; 3]>,
    /// Monomial exponents `{0, 1, α}` integrated exactly.
    pub exponents: [f64; 3],
}

impl CqWeights {
    /// Exactness residual for `t^ν` at row `n`:
    /// `Σ ω_{n-j} j^ν + Σ W_{n,j} j^ν − Γ(ν+1)/Γ(ν+1+α)·n^{ν+α}`, divided by
    /// the exact value. Direct O(n) evaluation; meant for checks.
    pub fn exactness_residual(&self, n: usize, nu: f64) -> f64 {
        let pow = |j: usize| {
            if j == 0 && nu == 0.0 {
                1.0
            } else {
                (j as f64).powf(nu)
            }
        };
        let conv: f64 = (0..=n).map(|j| self.omega[n - j] * pow(j)).sum();
        let start: f64 = (0..3).map(|j| self.start_weights[n][j] * pow(j)).sum();
        let exact =
            gamma(nu + 1.0) / gamma(nu + 1.0 + self.alpha) * (n as f64).powf(nu + self.alpha);
        (conv + start - exact) / exact
    }
}

/// Coefficients of `(1 − ξ)^{-a}`: `c_0 = 1`, `c_m = c_{m-1}·(m − 1 + a)/m`.
fn negative_binomial(a: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut c = 1.0;
    for m in 0..len {
        if m > 0 {
            c *= (m as f64 - 1.0 + a) / m as f64;
        }
        out.push(c);
    }
    out
}

/// Power-series coefficients of `((3 − 4ξ + ξ²)/2)^{-α}` through degree `n`.
fn bdf2_omega(alpha: f64, n: usize) -> Vec<f64> {
    let a = negative_binomial(alpha, n + 1);
    // (1 − ξ/3)^{-α}: coefficients fall below 1e-20 after about 45 terms;
    // beyond that they cannot change any ω in double precision.
    let mut third = Vec::new();
    let mut c = 1.0;
    while c >= 1e-20 {
        third.push(c);
        let k = third.len() as f64;
        c *= (k - 1.0 + alpha) / (3.0 * k);
    }
    let lead = (-alpha * 1.5f64.ln()).exp();
    (0..=n)
        .map(|m| {
            let terms = third.len().min(m + 1);
            // add smallest contributions first
            let s: f64 = (0..terms).rev().map(|k| third[k] * a[m - k]).sum();
            lead * s
        })
        .collect()
}

/// Solves `V w = r` for `V = [[1,1,1],[0,1,2],[0,1,2^α]]` (rows ν = 0, 1, α).
fn solve_start_system(two_alpha: f64, r: [f64; 3]) -> Option<[f64; 3]> {
    let det = two_alpha - 2.0;
    if det.abs() < 1e-12 {
        return None;
    }
    let w2 = (r[2] - r[1]) / det;
    let w1 = r[1] - 2.0 * w2;
    let w0 = r[0] - w1 - w2;
    Some([w0, w1, w2])
}

/// BDF2 convolution weights and starting weights for steps `0..=n`.
pub fn compute_cq_weights(alpha: f64, n: usize) -> Result<CqWeights, IvpError> {
    super::check_order(alpha)?;
    if n < 2 {
        return Err(IvpError::TooFewSteps { got: n, min: 2 });
    }
    let omega = bdf2_omega(alpha, n);

    // Σ_{j=1}^{m} ω_{m-j} j^α for all m through one history stream
    // (kernel w_k = ω_{k-1}, signal g_i = (i+1)^α).
    let plan =
        ConvolutionPlan::with_default_block(omega[..n].to_vec()).expect("kernel is non-empty");
    let mut stream = plan.stream();

    let c0 = 1.0 / gamma(1.0 + alpha);
    let c1 = 1.0 / gamma(2.0 + alpha);
    let ca = gamma(1.0 + alpha) / gamma(1.0 + 2.0 * alpha);
    let two_alpha = 2f64.powf(alpha);

    let mut start_weights = Vec::with_capacity(n + 1);
    start_weights.push([0.0; 3]);
    // running Σ_{k≤m} ω_k and Σ_{k≤m} k ω_k
    let mut prefix = omega[0];
    let mut moment = 0.0;
    for m in 1..=n {
        let mf = m as f64;
        prefix += omega[m];
        moment += mf * omega[m];
        let conv_alpha = stream.advance(mf.powf(alpha));
        let na = mf.powf(alpha);
        let r = [
            c0 * na - prefix,
            c1 * na * mf - (mf * prefix - moment),
            ca * na * na - conv_alpha,
        ];
        let w = solve_start_system(two_alpha, r).ok_or(IvpError::SingularStartSystem(m))?;
        start_weights.push(w);
    }

    Ok(CqWeights {
        alpha,
        omega,
        start_weights,
        exponents: [0.0, 1.0, alpha],
    })
}

/// `Σ_{i≥from} binom(a, i) x^i` for `|x|` well inside the unit disk.
fn binomial_tail(a: f64, x: f64, from: usize) -> f64 {
    let mut term = 1.0;
    for i in 1..=from {
        term *= (a - (i as f64 - 1.0)) / i as f64 * x;
    }
    let mut sum = term;
    let mut i = from;
    loop {
        i += 1;
        term *= (a - (i as f64 - 1.0)) / i as f64 * x;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() || i > 200 {
            return sum;
        }
    }
}

/// Above this lag the cancelling differences are evaluated through series.
const SERIES_FROM: usize = 10;

/// Weight sequences of the fractional Adams–Bashforth–Moulton scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AbmKernels {
    /// `b_m = (m+1)^α − m^α`, m = 0..N−1 (factor `h^α/Γ(α+1)`).
    pub predictor: Vec<f64>,
    /// `d_m = (m+1)^{α+1} − 2m^{α+1} + (m−1)^{α+1}`, m = 1..=N, stored at
    /// index m−1 (factor `h^α/Γ(α+2)`).
    pub corrector: Vec<f64>,
    /// `c_{0,n+1} = n^{α+1} − (n−α)(n+1)^α`, n = 0..N−1.
    pub boundary: Vec<f64>,
}

pub fn abm_kernels(alpha: f64, n: usize) -> Result<AbmKernels, IvpError> {
    super::check_order(alpha)?;
    if n < 1 {
        return Err(IvpError::TooFewSteps { got: n, min: 1 });
    }
    let predictor = (0..n)
        .map(|m| {
            let mf = m as f64;
            if m < SERIES_FROM {
                (mf + 1.0).powf(alpha) - mf.powf(alpha)
            } else {
                mf.powf(alpha) * binomial_tail(alpha, 1.0 / mf, 1)
            }
        })
        .collect();
    let a1 = alpha + 1.0;
    let corrector = (1..=n)
        .map(|m| {
            let mf = m as f64;
            if m < SERIES_FROM {
                (mf + 1.0).powf(a1) - 2.0 * mf.powf(a1) + (mf - 1.0).powf(a1)
            } else {
                let u = 1.0 / mf;
                mf.powf(a1) * (binomial_tail(a1, u, 2) + binomial_tail(a1, -u, 2))
            }
        })
        .collect();
    let boundary = (0..n)
        .map(|k| {
            let kf = k as f64;
            if k < SERIES_FROM {
                kf.powf(a1) - (kf - alpha) * (kf + 1.0).powf(alpha)
            } else {
                let v = 1.0 / (kf + 1.0);
                (kf + 1.0).powf(alpha) * (kf * binomial_tail(alpha, -v, 2) + alpha * v)
            }
        })
        .collect();
    Ok(AbmKernels {
        predictor,
        corrector,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_leading_coefficient() {
        let w = compute_cq_weights(1.55, 8).unwrap();
        assert!((w.omega[0] - 0.533_406_800_715_500_8).abs() < 1e-15);
        assert_eq!(w.omega[0], (-1.55 * 1.5f64.ln()).exp());
        assert_eq!(w.exponents, [0.0, 1.0, 1.55]);
    }

    #[test]
    fn omega_satisfies_generating_recurrence() {
        // δ(ξ)F'(ξ) = −α δ'(ξ) F(ξ) gives a three-term recurrence
        let alpha = 1.3;
        let w = compute_cq_weights(alpha, 400).unwrap().omega;
        for n in 1..400 {
            let nf = n as f64;
            let next = ((2.0 * nf + 2.0 * alpha) * w[n] - ((nf - 1.0) / 2.0 + alpha) * w[n - 1])
                * 2.0
                / (3.0 * (nf + 1.0));
            assert!((next - w[n + 1]).abs() <= 1e-13 * w[n + 1].abs(), "n = {n}");
        }
    }

    #[test]
    fn exactness_conditions_hold() {
        for &alpha in &[1.1, 1.5, 1.9] {
            let w = compute_cq_weights(alpha, 300).unwrap();
            for n in [1, 2, 3, 10, 77, 300] {
                for nu in [0.0, 1.0, alpha] {
                    let r = w.exactness_residual(n, nu);
                    assert!(r.abs() < 1e-10, "alpha {alpha} n {n} nu {nu}: {r:e}");
                }
            }
        }
    }

    #[test]
    fn abm_values() {
        let k = abm_kernels(1.5, 40).unwrap();
        assert_eq!(k.predictor[0], 1.0);
        assert!((k.corrector[0] - 3.656_854_249_492_38).abs() < 1e-13);
        assert_eq!(k.boundary[0], 1.5);
        // series branch continues the direct formula smoothly
        for m in SERIES_FROM..40 {
            let mf = m as f64;
            let direct = (mf + 1.0).powf(1.5) - mf.powf(1.5);
            assert!((k.predictor[m] - direct).abs() < 1e-12 * direct);
            let direct = (mf + 1.0).powf(2.5) - 2.0 * mf.powf(2.5) + (mf - 1.0).powf(2.5);
            assert!((k.corrector[m - 1] - direct).abs() < 1e-10 * direct);
            let direct = mf.powf(2.5) - (mf - 1.5) * (mf + 1.0).powf(1.5);
            assert!((k.boundary[m] - direct).abs() < 1e-10 * direct.abs());
        }
    }
}
