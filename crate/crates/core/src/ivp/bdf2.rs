//! BDF2 convolution quadrature with starting weights.
//!
//! `y_n = T_n + h^α (H_n + ω_0 f(t_n, y_n) + Σ_{j≤2} W_{n,j} f_j)` where
//! `H_n = Σ_{j<n} ω_{n-j} f_j` is the history sum. The starting weights tie
//! `y_1` and `y_2` together, so those two are solved as one 2×2 system.

use crate::fastconv::ConvolutionPlan;

use super::{
    compute_cq_weights, eval_rhs, grid_times, GridConfig, IvpError, IvpProblem, Trajectory,
};

fn fd_step(y: f64) -> f64 {
    1e-7 * y.abs().max(1.0)
}

fn converged(delta: f64, y: f64, tol: f64) -> bool {
    delta.abs() <= tol * y.abs().max(1.0)
}

/// Root of `y − c − κ f(t, y)`. Newton with a difference-quotient slope,
/// then damped fixed-point iteration if Newton stalls.
fn implicit_step<F: Fn(f64, f64) -> f64>(
    rhs: &F,
    t: f64,
    c: f64,
    kappa: f64,
    guess: f64,
    g: &GridConfig,
) -> Result<(f64, f64), IvpError> {
    let mut y = guess;
    let mut f = eval_rhs(rhs, t, y)?;
    for _ in 0..g.newton_max_iter {
        let residual = y - c - kappa * f;
        let dy = fd_step(y);
        let slope = (eval_rhs(rhs, t, y + dy)? - f) / dy;
        let deriv = 1.0 - kappa * slope;
        if deriv.abs() < 1e-12 {
            break;
        }
        let delta = residual / deriv;
        y -= delta;
        f = eval_rhs(rhs, t, y)?;
        if converged(delta, y, g.newton_tol) {
            return Ok((y, f));
        }
    }

    let mut y = guess;
    let mut f = eval_rhs(rhs, t, y)?;
    let damping = 0.5;
    for _ in 0..20 * g.newton_max_iter {
        let next = c + kappa * f;
        let delta = damping * (next - y);
        y += delta;
        f = eval_rhs(rhs, t, y)?;
        if converged(delta, y, g.newton_tol) {
            return Ok((y, f));
        }
    }
    Err(IvpError::NewtonFailed {
        t,
        iterations: 21 * g.newton_max_iter,
    })
}

pub(super) fn solve<F: Fn(f64, f64) -> f64>(
    p: &IvpProblem<F>,
    g: &GridConfig,
) -> Result<Trajectory, IvpError> {
    let n = g.n_steps;
    let h = p.horizon / n as f64;
    let ha = h.powf(p.alpha);
    let w = compute_cq_weights(p.alpha, n)?;
    let om = &w.omega;

    let times = grid_times(p.horizon, n);
    let taylor = |j: usize| p.y0 + p.y0prime * times[j];
    let mut values = Vec::with_capacity(n + 1);
    let mut rhs_values = Vec::with_capacity(n + 1);
    values.push(p.y0);
    rhs_values.push(eval_rhs(&p.rhs, 0.0, p.y0)?);

    let (y1, y2, f1, f2) = startup(p, g, &w, ha, &times, rhs_values[0])?;
    values.extend([y1, y2]);
    rhs_values.extend([f1, f2]);

    let plan = ConvolutionPlan::with_default_block(om[1..].to_vec()).expect("n >= 2");
    let mut history = plan.stream();
    history.advance(rhs_values[0]);
    history.advance(rhs_values[1]);

    let f_start = [rhs_values[0], rhs_values[1], rhs_values[2]];
    for k in 3..=n {
        let hist = history.advance(rhs_values[k - 1]);
        let sw = &w.start_weights[k];
        let start = sw[0] * f_start[0] + sw[1] * f_start[1] + sw[2] * f_start[2];
        let c = taylor(k) + ha * (hist + start);
        let guess = 2.0 * values[k - 1] - values[k - 2];
        let (y, f) = implicit_step(&p.rhs, times[k], c, ha * om[0], guess, g)?;
        values.push(y);
        rhs_values.push(f);
    }

    Ok(Trajectory {
        step: h,
        times,
        values,
        rhs_values,
    })
}

/// Solves the coupled equations for `y_1, y_2`; returns `(y1, y2, f1, f2)`.
fn startup<F: Fn(f64, f64) -> f64>(
    p: &IvpProblem<F>,
    g: &GridConfig,
    w: &super::CqWeights,
    ha: f64,
    times: &[f64],
    f0: f64,
) -> Result<(f64, f64, f64, f64), IvpError> {
    let om = &w.omega;
    let sw = &w.start_weights;
    // coefficient of f_k in the quadrature for y_m (m, k ∈ {1, 2})
    let coef = |m: usize, k: usize| -> f64 {
        let conv = if k <= m { om[m - k] } else { 0.0 };
        ha * (conv + sw[m][k])
    };
    let fixed = |m: usize| p.y0 + p.y0prime * times[m] + ha * (om[m] + sw[m][0]) * f0;
    let c = [fixed(1), fixed(2)];
    let a = [[coef(1, 1), coef(1, 2)], [coef(2, 1), coef(2, 2)]];
    let (t1, t2) = (times[1], times[2]);
    let rhs = &p.rhs;

    let residual = |y: [f64; 2], f: [f64; 2]| {
        [
            y[0] - c[0] - a[0][0] * f[0] - a[0][1] * f[1],
            y[1] - c[1] - a[1][0] * f[0] - a[1][1] * f[1],
        ]
    };

    let mut y = c;
    let mut f = [eval_rhs(rhs, t1, y[0])?, eval_rhs(rhs, t2, y[1])?];
    for _ in 0..g.newton_max_iter {
        let r = residual(y, f);
        let d0 = fd_step(y[0]);
        let d1 = fd_step(y[1]);
        let s0 = (eval_rhs(rhs, t1, y[0] + d0)? - f[0]) / d0;
        let s1 = (eval_rhs(rhs, t2, y[1] + d1)? - f[1]) / d1;
        let j = [
            [1.0 - a[0][0] * s0, -a[0][1] * s1],
            [-a[1][0] * s0, 1.0 - a[1][1] * s1],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-12 {
            break;
        }
        let dx0 = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let dx1 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        y = [y[0] - dx0, y[1] - dx1];
        f = [eval_rhs(rhs, t1, y[0])?, eval_rhs(rhs, t2, y[1])?];
        if converged(dx0, y[0], g.newton_tol) && converged(dx1, y[1], g.newton_tol) {
            return Ok((y[0], y[1], f[0], f[1]));
        }
    }

    // damped fixed point on the same system
    let mut y = c;
    let mut f = [eval_rhs(rhs, t1, y[0])?, eval_rhs(rhs, t2, y[1])?];
    for _ in 0..20 * g.newton_max_iter {
        let r = residual(y, f);
        let next = [y[0] - 0.5 * r[0], y[1] - 0.5 * r[1]];
        let done = converged(next[0] - y[0], next[0], g.newton_tol)
            && converged(next[1] - y[1], next[1], g.newton_tol);
        y = next;
        f = [eval_rhs(rhs, t1, y[0])?, eval_rhs(rhs, t2, y[1])?];
        if done {
            return Ok((y[0], y[1], f[0], f[1]));
        }
    }
    Err(IvpError::NewtonFailed {
        t: t2,
        iterations: 21 * g.newton_max_iter,
    })
}
