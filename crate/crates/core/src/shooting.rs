//! Shooting for the two-point problem
//!
//! ```text
//! D^α y = f(t, y),   y(0) = b0,   y(T) = b1,
//! ```
//!
//! by iterating the initial slope `s = y'(0)` with proportional secting:
//! with `φ(s)` the terminal value of the IVP solution started at slope `s`,
//!
//! ```text
//! λ = (b1 − φ(s_{k-1})) / (φ(s_k) − φ(s_{k-1})),   s_{k+1} = λ s_k + (1 − λ) s_{k-1}.
//! ```

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ivp::{solve_ivp, GridConfig, IvpError, IvpProblem, Trajectory};

#[derive(Clone)]
pub struct BvpProblem<F> {
    alpha: f64,
    horizon: f64,
    b0: f64,
    b1: f64,
    rhs: F,
}

impl<F> fmt::Debug for BvpProblem<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BvpProblem")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("b0", &self.b0)
            .field("b1", &self.b1)
            .finish_non_exhaustive()
    }
}

impl<F: Fn(f64, f64) -> f64> BvpProblem<F> {
    pub fn new(alpha: f64, horizon: f64, b0: f64, b1: f64, rhs: F) -> Result<Self, IvpError> {
        if !b1.is_finite() {
            return Err(IvpError::BadInitialData {
                y0: b0,
                y0prime: b1,
            });
        }
        // reuse the IVP checks for α, T and b0
        IvpProblem::new(alpha, horizon, b0, 0.0, |_: f64, _: f64| 0.0)?;
        Ok(BvpProblem {
            alpha,
            horizon,
            b0,
            b1,
            rhs,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn rhs(&self) -> &F {
        &self.rhs
    }

    /// The initial value problem fired with slope `s`.
    pub fn ivp(&self, slope: f64) -> Result<IvpProblem<&F>, IvpError> {
        IvpProblem::new(self.alpha, self.horizon, self.b0, slope, &self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// Accept once `|y_k(T) − b1| ≤ tol`.
    pub tol: f64,
    /// Cap on the total number of IVP solves.
    pub max_iter: usize,
    /// Overrides the default starting slopes.
    pub initial_slopes: Option<(f64, f64)>,
    /// Secant denominators below `min_denominator·max(1, |y_k(T)|)` abort.
    pub min_denominator: f64,
}

impl ShootingConfig {
    pub fn new(tol: f64) -> Self {
        ShootingConfig {
            tol,
            max_iter: 25,
            initial_slopes: None,
            min_denominator: 1e-14,
        }
    }

    fn validate(&self) -> Result<(), ShootingError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ShootingError::BadConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 2 {
            return Err(ShootingError::BadConfig(
                "max_iter must allow at least two solves".into(),
            ));
        }
        if !(self.min_denominator >= 0.0) {
            return Err(ShootingError::BadConfig(
                "min_denominator must be non-negative".into(),
            ));
        }
        if let Some((a, b)) = self.initial_slopes {
            if !(a.is_finite() && b.is_finite()) || a == b {
                return Err(ShootingError::BadConfig(format!(
                    "initial slopes must be finite and distinct, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }
}

/// One IVP solve of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingRecord {
    pub slope: f64,
    pub terminal: f64,
    pub residual: f64,
    /// λ of the secant step taken from this record and its predecessor.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ShootingReport {
    pub iterations: Vec<ShootingRecord>,
    pub converged: bool,
    pub ivp_solve_count: usize,
}

impl ShootingReport {
    /// Number of proportional-secting updates performed.
    pub fn secant_steps(&self) -> usize {
        self.iterations
            .iter()
            .filter(|r| r.lambda.is_some())
            .count()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.iterations.last().map(|r| r.residual)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error("invalid shooting configuration: {0}")]
    BadConfig(String),
    #[error("no convergence after {} IVP solves (last residual {:e})", .report.ivp_solve_count,
        .report.final_residual().unwrap_or(f64::NAN))]
    NotConverged { report: Box<ShootingReport> },
    #[error("secant denominator {denominator:e} is degenerate; terminal values no longer separate the slopes")]
    DegenerateSecant {
        denominator: f64,
        report: Box<ShootingReport>,
    },
    #[error("IVP solve failed: {source}")]
    Ivp {
        source: IvpError,
        report: Box<ShootingReport>,
    },
}

impl ShootingError {
    pub fn report(&self) -> Option<&ShootingReport> {
        match self {
            ShootingError::BadConfig(_) => None,
            ShootingError::NotConverged { report }
            | ShootingError::DegenerateSecant { report, .. }
            | ShootingError::Ivp { report, .. } => Some(report),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("secant denominator {denominator:e} below threshold")]
pub struct DegenerateDenominator {
    pub denominator: f64,
}

/// One proportional-secting step; returns `(s_next, λ)`.
pub fn secant_update(
    s_prev: f64,
    s_curr: f64,
    yt_prev: f64,
    yt_curr: f64,
    b1: f64,
    min_denominator: f64,
) -> Result<(f64, f64), DegenerateDenominator> {
    let denominator = yt_curr - yt_prev;
    if !(denominator.abs() > min_denominator * yt_curr.abs().max(1.0)) {
        return Err(DegenerateDenominator { denominator });
    }
    let lambda = (b1 - yt_prev) / denominator;
    Ok((lambda * s_curr + (1.0 - lambda) * s_prev, lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuesses {
    /// Two distinct slopes; `first` holds the solve already done for `s0`.
    Pair {
        s0: f64,
        s1: f64,
        first: Option<Trajectory>,
    },
    /// The slope-0 trajectory already hits `b1` exactly.
    Exact(Trajectory),
}

/// Default starting slopes: `(0, (b1 − b0)/T)`, or for `b0 = b1` the slope 0
/// and then ±1 depending on which side of `b1` the slope-0 solution ends.
pub fn initial_guesses<F: Fn(f64, f64) -> f64>(
    p: &BvpProblem<F>,
    g: &GridConfig,
) -> Result<InitialGuesses, IvpError> {
    if p.b0 != p.b1 {
        return Ok(InitialGuesses::Pair {
            s0: 0.0,
            s1: (p.b1 - p.b0) / p.horizon,
            first: None,
        });
    }
    let tr = solve_ivp(&p.ivp(0.0)?, g)?;
    let end = tr.terminal();
    if end == p.b1 {
        return Ok(InitialGuesses::Exact(tr));
    }
    let s1 = if end > p.b1 { 1.0 } else { -1.0 };
    Ok(InitialGuesses::Pair {
        s0: 0.0,
        s1,
        first: Some(tr),
    })
}

pub fn solve_bvp<F: Fn(f64, f64) -> f64>(
    p: &BvpProblem<F>,
    g: &GridConfig,
    c: &ShootingConfig,
) -> Result<(Trajectory, ShootingReport), ShootingError> {
    c.validate()?;
    let mut report = ShootingReport::default();
    let fail = |source: IvpError, report: &ShootingReport| ShootingError::Ivp {
        source,
        report: Box::new(report.clone()),
    };

    let (s0, s1, first) = match c.initial_slopes {
        Some((a, b)) => (a, b, None),
        None => match initial_guesses(p, g) {
            Ok(InitialGuesses::Exact(tr)) => {
                report.ivp_solve_count = 1;
                report.iterations.push(ShootingRecord {
                    slope: 0.0,
                    terminal: tr.terminal(),
                    residual: 0.0,
                    lambda: None,
                });
                report.converged = true;
                return Ok((tr, report));
            }
            Ok(InitialGuesses::Pair { s0, s1, first }) => {
                if first.is_some() {
                    report.ivp_solve_count = 1;
                }
                (s0, s1, first)
            }
            Err(e) => return Err(fail(e, &report)),
        },
    };

    let shoot = |slope: f64, report: &mut ShootingReport| -> Result<Trajectory, ShootingError> {
        let tr = p
            .ivp(slope)
            .and_then(|ivp| solve_ivp(&ivp, g))
            .map_err(|e| fail(e, report))?;
        report.ivp_solve_count += 1;
        let terminal = tr.terminal();
        report.iterations.push(ShootingRecord {
            slope,
            terminal,
            residual: terminal - p.b1,
            lambda: None,
        });
        Ok(tr)
    };

    let mut prev = match first {
        Some(tr) => {
            report.iterations.push(ShootingRecord {
                slope: s0,
                terminal: tr.terminal(),
                residual: tr.terminal() - p.b1,
                lambda: None,
            });
            tr
        }
        None => shoot(s0, &mut report)?,
    };
    if (prev.terminal() - p.b1).abs() <= c.tol {
        report.converged = true;
        return Ok((prev, report));
    }
    let mut curr = shoot(s1, &mut report)?;
    let (mut s_prev, mut s_curr) = (s0, s1);

    loop {
        if (curr.terminal() - p.b1).abs() <= c.tol {
            report.converged = true;
            return Ok((curr, report));
        }
        if report.ivp_solve_count >= c.max_iter {
            return Err(ShootingError::NotConverged {
                report: Box::new(report),
            });
        }
        let (s_next, lambda) = match secant_update(
            s_prev,
            s_curr,
            prev.terminal(),
            curr.terminal(),
            p.b1,
            c.min_denominator,
        ) {
            Ok(v) => v,
            Err(DegenerateDenominator { denominator }) => {
                return Err(ShootingError::DegenerateSecant {
                    denominator,
                    report: Box::new(report),
                })
            }
        };
        report
            .iterations
            .last_mut()
            .expect("at least two records")
            .lambda = Some(lambda);
        let next = shoot(s_next, &mut report)?;
        prev = std::mem::replace(&mut curr, next);
        s_prev = s_curr;
        s_curr = s_next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ivp::Method;

    #[test]
    fn secant_examples() {
        assert_eq!(
            secant_update(0.0, 1.0, 2.0, 4.0, 3.0, 1e-14).unwrap(),
            (0.5, 0.5)
        );
        let (s, l) = secant_update(0.3, 0.7, 1.0, 2.0, 2.0, 1e-14).unwrap();
        assert_eq!((s, l), (0.7, 1.0));
        // φ(s) = 2s + 1 is hit exactly
        let phi = |s: f64| 2.0 * s + 1.0;
        let (s, _) = secant_update(0.0, 1.0, phi(0.0), phi(1.0), 5.0, 1e-14).unwrap();
        assert_eq!(s, 2.0);
        let (s, _) = secant_update(-3.0, 0.25, phi(-3.0), phi(0.25), 5.0, 1e-14).unwrap();
        assert!((s - 2.0).abs() <= 2.0 * f64::EPSILON);
        assert!(secant_update(0.0, 1.0, 2.0, 2.0, 3.0, 1e-14).is_err());
    }

    #[test]
    fn guesses_from_boundary_data() {
        let g = GridConfig::new(290, Method::Bdf2);
        let p = BvpProblem::new(1.55, 2.9, 1.0, 1.145, |_, _| 0.0).unwrap();
        match initial_guesses(&p, &g).unwrap() {
            InitialGuesses::Pair { s0, s1, first } => {
                assert_eq!(s0, 0.0);
                assert!((s1 - 0.05).abs() < 1e-15);
                assert!(first.is_none());
            }
            other => panic!("{other:?}"),
        }

        let zero = BvpProblem::new(1.5, 1.0, 0.0, 0.0, |_, _| 0.0).unwrap();
        assert!(matches!(
            initial_guesses(&zero, &g),
            Ok(InitialGuesses::Exact(_))
        ));
        let (tr, rep) = solve_bvp(&zero, &g, &ShootingConfig::new(1e-12)).unwrap();
        assert!(rep.converged && rep.ivp_solve_count == 1);
        assert!(tr.values.iter().all(|&v| v == 0.0));

        // positive forcing pushes the slope-0 solution above b1
        let up = BvpProblem::new(1.5, 1.0, 0.0, 0.0, |_, _| 1.0).unwrap();
        match initial_guesses(&up, &g).unwrap() {
            InitialGuesses::Pair { s1, first, .. } => {
                assert_eq!(s1, 1.0);
                assert!(first.is_some());
            }
            other => panic!("{other:?}"),
        }
        let down = BvpProblem::new(1.5, 1.0, 0.0, 0.0, |_, _| -1.0).unwrap();
        assert!(
            matches!(initial_guesses(&down, &g).unwrap(), InitialGuesses::Pair { s1, .. } if s1 == -1.0)
        );
    }

    #[test]
    fn config_validation() {
        let p = BvpProblem::new(1.5, 1.0, 0.0, 1.0, |_, _| 0.0).unwrap();
        let g = GridConfig::new(20, Method::Bdf2);
        let mut c = ShootingConfig::new(0.0);
        assert!(matches!(
            solve_bvp(&p, &g, &c),
            Err(ShootingError::BadConfig(_))
        ));
        c.tol = 1e-8;
        c.initial_slopes = Some((1.0, 1.0));
        assert!(matches!(
            solve_bvp(&p, &g, &c),
            Err(ShootingError::BadConfig(_))
        ));
    }
}
