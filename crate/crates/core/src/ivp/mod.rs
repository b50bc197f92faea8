//! Fractional initial value problems
//!
//! ```text
//! D^α y = f(t, y),   y(0) = y0,   y'(0) = y0',   1 < α < 2,
//! ```
//!
//! marched on a uniform grid through the equivalent Volterra equation
//! `y(t) = y0 + y0'·t + (1/Γ(α)) ∫_0^t (t−τ)^{α−1} f(τ, y(τ)) dτ`.
//! Two schemes are available: the fractional Adams–Bashforth–Moulton
//! predictor–corrector and the BDF2 convolution quadrature with starting
//! weights. Both evaluate their history sums with [`crate::fastconv`].

mod abm;
mod bdf2;
mod weights;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use weights::{abm_kernels, compute_cq_weights, AbmKernels, CqWeights};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IvpError {
    #[error("order alpha = {0} is outside the open interval (1, 2)")]
    BadOrder(f64),
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("initial data must be finite (y0 = {y0}, y0' = {y0prime})")]
    BadInitialData { y0: f64, y0prime: f64 },
    #[error("need at least {min} steps, got {got}")]
    TooFewSteps { got: usize, min: usize },
    #[error("step size {h} is not a valid divisor of the horizon {horizon}")]
    StepMismatch { h: f64, horizon: f64 },
    #[error("invalid solver setting: {0}")]
    BadConfig(String),
    #[error("right-hand side is not finite at t = {t}, y = {y}")]
    NonFiniteRhs { t: f64, y: f64 },
    #[error("implicit step at t = {t} did not converge in {iterations} iterations")]
    NewtonFailed { t: f64, iterations: usize },
    #[error("starting-weight system is singular at step {0}")]
    SingularStartSystem(usize),
}

pub(crate) fn check_order(alpha: f64) -> Result<(), IvpError> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(IvpError::BadOrder(alpha))
    }
}

/// Problem data; the right-hand side is any `Fn(t, y) -> f64`.
#[derive(Clone)]
pub struct IvpProblem<F> {
    alpha: f64,
    horizon: f64,
    y0: f64,
    y0prime: f64,
    rhs: F,
}

impl<F> fmt::Debug for IvpProblem<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("alpha", &self.alpha)
            .field("horizon", &self.horizon)
            .field("y0", &self.y0)
            .field("y0prime", &self.y0prime)
            .finish_non_exhaustive()
    }
}

impl<F: Fn(f64, f64) -> f64> IvpProblem<F> {
    pub fn new(alpha: f64, horizon: f64, y0: f64, y0prime: f64, rhs: F) -> Result<Self, IvpError> {
        check_order(alpha)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(IvpError::BadHorizon(horizon));
        }
        if !(y0.is_finite() && y0prime.is_finite()) {
            return Err(IvpError::BadInitialData { y0, y0prime });
        }
        Ok(IvpProblem {
            alpha,
            horizon,
            y0,
            y0prime,
            rhs,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn y0prime(&self) -> f64 {
        self.y0prime
    }

    pub fn rhs(&self) -> &F {
        &self.rhs
    }

    /// Same problem with another initial slope, borrowing the right-hand side.
    pub fn with_slope(&self, y0prime: f64) -> Result<IvpProblem<&F>, IvpError> {
        IvpProblem::new(self.alpha, self.horizon, self.y0, y0prime, &self.rhs)
    }

    /// Same problem on another horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<IvpProblem<&F>, IvpError> {
        IvpProblem::new(self.alpha, horizon, self.y0, self.y0prime, &self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Abm,
    Bdf2,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Abm => "abm",
            Method::Bdf2 => "bdf2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n_steps: usize,
    pub method: Method,
    /// Corrector sweeps per ABM step (PECE for 1).
    pub corrector_sweeps: usize,
    /// Relative stopping tolerance of the BDF2 implicit solves.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl GridConfig {
    pub fn new(n_steps: usize, method: Method) -> Self {
        GridConfig {
            n_steps,
            method,
            corrector_sweeps: 1,
            newton_tol: 1e-13,
            newton_max_iter: 50,
        }
    }

    /// Grid from a step size: `N = round(T/h)`, rejected unless `N·h`
    /// reproduces `T` to `1e-9·T`.
    pub fn from_step(horizon: f64, h: f64, method: Method) -> Result<Self, IvpError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(IvpError::BadHorizon(horizon));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(IvpError::StepMismatch { h, horizon });
        }
        let n = (horizon / h).round();
        if !(1.0..=1e12).contains(&n) || (n * h - horizon).abs() > 1e-9 * horizon {
            return Err(IvpError::StepMismatch { h, horizon });
        }
        Ok(GridConfig::new(n as usize, method))
    }

    pub fn step(&self, horizon: f64) -> f64 {
        horizon / self.n_steps as f64
    }

    fn validate(&self) -> Result<(), IvpError> {
        let min = match self.method {
            Method::Abm => 1,
            Method::Bdf2 => 2,
        };
        if self.n_steps < min {
            return Err(IvpError::TooFewSteps {
                got: self.n_steps,
                min,
            });
        }
        if self.corrector_sweeps == 0 {
            return Err(IvpError::BadConfig(
                "corrector_sweeps must be positive".into(),
            ));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(IvpError::BadConfig(
                "newton tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Discrete solution on the uniform grid `t_j = j·h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `f(t_j, y_j)` at the accepted values.
    pub rhs_values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `y_N`, the value at the horizon.
    pub fn terminal(&self) -> f64 {
        *self
            .values
            .last()
            .expect("trajectory has at least one node")
    }
}

fn grid_times(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|j| horizon * (j as f64 / n as f64)).collect()
}

pub(crate) fn eval_rhs<F: Fn(f64, f64) -> f64>(rhs: &F, t: f64, y: f64) -> Result<f64, IvpError> {
    let v = rhs(t, y);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IvpError::NonFiniteRhs { t, y })
    }
}

pub fn solve_ivp<F: Fn(f64, f64) -> f64>(
    problem: &IvpProblem<F>,
    grid: &GridConfig,
) -> Result<Trajectory, IvpError> {
    grid.validate()?;
    match grid.method {
        Method::Abm => abm::solve(problem, grid),
        Method::Bdf2 => bdf2::solve(problem, grid),
    }
}

/// Where the terminal reference value for an order estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalReference {
    /// Known exact `y(T)`.
    Exact(f64),
    /// Solve on a grid `factor` times finer than the coarse one (factor ≥ 8).
    Refined { factor: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub n_steps: usize,
    pub error_coarse: f64,
    pub error_fine: f64,
    pub order: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error("order not measurable at this resolution (errors {coarse:e} and {fine:e})")]
    NotMeasurable { coarse: f64, fine: f64 },
    #[error("reference refinement factor must be at least 8, got {0}")]
    BadFactor(usize),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Below this the terminal error is indistinguishable from rounding.
pub const MEASURABLE_ERROR: f64 = 1e-14;

/// `log2(|e_N| / |e_{2N}|)` from terminal errors at `N = grid.n_steps` and `2N`.
pub fn estimate_order<F: Fn(f64, f64) -> f64>(
    problem: &IvpProblem<F>,
    grid: &GridConfig,
    reference: TerminalReference,
) -> Result<OrderEstimate, OrderError> {
    let exact = match reference {
        TerminalReference::Exact(v) => v,
        TerminalReference::Refined { factor } => {
            if factor < 8 {
                return Err(OrderError::BadFactor(factor));
            }
            let fine = GridConfig {
                n_steps: grid.n_steps * factor,
                ..*grid
            };
            solve_ivp(problem, &fine)?.terminal()
        }
    };
    let coarse = (solve_ivp(problem, grid)?.terminal() - exact).abs();
    let doubled = GridConfig {
        n_steps: 2 * grid.n_steps,
        ..*grid
    };
    let fine = (solve_ivp(problem, &doubled)?.terminal() - exact).abs();
    if coarse < MEASURABLE_ERROR || fine < MEASURABLE_ERROR {
        return Err(OrderError::NotMeasurable { coarse, fine });
    }
    Ok(OrderEstimate {
        n_steps: grid.n_steps,
        error_coarse: coarse,
        error_fine: fine,
        order: (coarse / fine).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_validation() {
        let f = |_: f64, y: f64| y;
        assert!(matches!(
            IvpProblem::new(1.0, 1.0, 0.0, 0.0, f),
            Err(IvpError::BadOrder(_))
        ));
        assert!(matches!(
            IvpProblem::new(2.0, 1.0, 0.0, 0.0, f),
            Err(IvpError::BadOrder(_))
        ));
        assert!(matches!(
            IvpProblem::new(1.5, 0.0, 0.0, 0.0, f),
            Err(IvpError::BadHorizon(_))
        ));
        assert!(IvpProblem::new(1.5, 1.0, f64::NAN, 0.0, f).is_err());
        assert!(IvpProblem::new(1.5, 1.0, 0.0, 0.0, f).is_ok());
    }

    #[test]
    fn grid_from_step() {
        let g = GridConfig::from_step(2.9, 0.01, Method::Bdf2).unwrap();
        assert_eq!(g.n_steps, 290);
        assert!(GridConfig::from_step(1.0, 0.3, Method::Bdf2).is_err());
        assert!(GridConfig::from_step(1.0, 0.0, Method::Bdf2).is_err());
        assert_eq!(
            GridConfig::from_step(5.384, 1e-6, Method::Abm)
                .unwrap()
                .n_steps,
            5_384_000
        );
    }

    #[test]
    fn grid_nodes_hit_the_horizon() {
        let t = grid_times(2.9, 290);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[290], 2.9);
        assert!((t[100] - 1.0).abs() < 1e-15);
    }
}
