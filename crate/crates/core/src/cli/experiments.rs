use rayon::prelude::*;
use serde::Serialize;

use super::CliError;
use crate::analysis::{crossing, Intersection};
use crate::expr::Expression;
use crate::ivp::{solve_ivp, GridConfig, IvpProblem, Method, Trajectory, MEASURABLE_ERROR};
use crate::shooting::{solve_bvp, BvpProblem, ShootingConfig, ShootingReport};

pub const EXAMPLE_ALPHA: f64 = 1.55;
pub const EXAMPLE_HORIZON: f64 = 2.9;
pub const EXAMPLE_B0: f64 = 1.0;
pub const EXAMPLE_B1: f64 = 1.145;

/// `(1/h, tolerance)` per row.
pub const TABLE1_ROWS: [(u64, f64); 6] = [
    (100, 1e-4),
    (100, 1e-8),
    (200, 1e-8),
    (400, 1e-8),
    (400, 1e-10),
    (800, 1e-10),
];

/// Initial slopes of the two crossing trajectories.
pub const FIGURE1_SLOPES: (f64, f64) = (-0.15, -0.3);

const REFERENCE_TOL: f64 = 1e-12;

pub fn example_rhs(t: f64, y: f64) -> f64 {
    (t + 5.0).powf(-0.65) * (1.3 * t * y).sin()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub step_denominator: u64,
    pub n_steps: usize,
    pub tol: f64,
    pub iterations: usize,
    pub final_residual: f64,
    /// Max over the row's nodes of |y − y_ref|.
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Reference {
    pub step_denominator: u64,
    pub n_steps: usize,
    pub iterations: usize,
    /// |y_ref(T) − y_half(T)| against the reference at twice the step.
    pub self_test_terminal_diff: f64,
    /// Max over shared nodes of |y_ref − y_half|.
    pub self_test_max_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub step_scale: u64,
    pub reference: Table1Reference,
    pub rows: Vec<Table1Row>,
}

fn example_bvp() -> BvpProblem<fn(f64, f64) -> f64> {
    BvpProblem::new(
        EXAMPLE_ALPHA,
        EXAMPLE_HORIZON,
        EXAMPLE_B0,
        EXAMPLE_B1,
        example_rhs as fn(f64, f64) -> f64,
    )
    .expect("example problem is valid")
}

/// Steps per unit step-denominator: T·(1/h) with T = 2.9.
fn example_steps(denominator: u64) -> usize {
    (denominator * 29 / 10) as usize
}

fn shoot(denominator: u64, tol: f64) -> Result<(Trajectory, ShootingReport), CliError> {
    let grid = GridConfig::new(example_steps(denominator), Method::Bdf2);
    solve_bvp(&example_bvp(), &grid, &ShootingConfig::new(tol))
        .map_err(|e| CliError::from_shooting(e, None))
}

/// Reruns the example table rows with steps `1/(d·step_scale)` against a BDF2
/// reference `reference_factor` times finer than the finest row.
pub fn table1(step_scale: u64, reference_factor: u64) -> Result<Table1, CliError> {
    if step_scale == 0 || reference_factor < 2 {
        return Err(CliError::Usage(
            "step scale must be >= 1 and reference factor >= 2".into(),
        ));
    }
    let finest = TABLE1_ROWS.iter().map(|r| r.0).max().expect("rows") * step_scale;
    let ref_den = finest * reference_factor;

    let ((reference, half), rows) = rayon::join(
        || {
            rayon::join(
                || shoot(ref_den, REFERENCE_TOL),
                || shoot(ref_den / 2, REFERENCE_TOL),
            )
        },
        || {
            TABLE1_ROWS
                .par_iter()
                .map(|&(den, tol)| shoot(den * step_scale, tol).map(|r| (den * step_scale, tol, r)))
                .collect::<Result<Vec<_>, _>>()
        },
    );
    let (reference, ref_report) = reference?;
    let (half, _) = half?;
    let rows = rows?;

    let max_diff_on = |coarse: &Trajectory, den: u64| -> f64 {
        let stride = (ref_den / den) as usize;
        coarse
            .values
            .iter()
            .enumerate()
            .map(|(j, y)| (y - reference.values[j * stride]).abs())
            .fold(0.0, f64::max)
    };

    let reference_info = Table1Reference {
        step_denominator: ref_den,
        n_steps: reference.len() - 1,
        iterations: ref_report.ivp_solve_count,
        self_test_terminal_diff: (reference.terminal() - half.terminal()).abs(),
        self_test_max_diff: max_diff_on(&half, ref_den / 2),
    };
    let rows = rows
        .into_iter()
        .map(|(den, tol, (tr, rep))| Table1Row {
            step_denominator: den,
            n_steps: tr.len() - 1,
            tol,
            iterations: rep.ivp_solve_count,
            final_residual: rep.final_residual().unwrap_or(f64::NAN),
            max_error: max_diff_on(&tr, den),
        })
        .collect();
    Ok(Table1 {
        step_scale,
        reference: reference_info,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct Figure1 {
    pub first: Trajectory,
    pub second: Trajectory,
    /// `None` when the trajectories do not cross on the horizon.
    pub intersection: Option<Intersection>,
}

/// The two example IVPs `y(0) = 1`, `y'(0) ∈ FIGURE1_SLOPES` on `[0, horizon]`.
pub fn figure1(h: f64, horizon: f64, method: Method) -> Result<Figure1, CliError> {
    let grid =
        GridConfig::from_step(horizon, h, method).map_err(|e| CliError::Usage(e.to_string()))?;
    let solve = |slope: f64| {
        let p = IvpProblem::new(EXAMPLE_ALPHA, horizon, EXAMPLE_B0, slope, example_rhs)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        solve_ivp(&p, &grid).map_err(|e| CliError::from_ivp(e, None))
    };
    let first = solve(FIGURE1_SLOPES.0)?;
    let second = solve(FIGURE1_SLOPES.1)?;
    let intersection = crossing(&first, &second);
    Ok(Figure1 {
        first,
        second,
        intersection,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub n_steps: usize,
    pub error: f64,
    /// `log2`-type order against the previous row; `None` for the first row
    /// or when either error is below the rounding floor.
    pub order: Option<f64>,
}

/// Terminal errors for each `N` in `n_list` and the orders between
/// consecutive entries.
pub fn converge<F: Fn(f64, f64) -> f64 + Sync>(
    problem: &IvpProblem<F>,
    method: Method,
    n_list: &[usize],
    exact: Option<f64>,
    refine_factor: usize,
    rhs: Option<&Expression>,
) -> Result<Vec<ConvergeRow>, CliError> {
    if n_list.is_empty() {
        return Err(CliError::Usage("need at least one step count".into()));
    }
    let reference = match exact {
        Some(v) => v,
        None => {
            if refine_factor < 2 {
                return Err(CliError::Usage("refine factor must be at least 2".into()));
            }
            let n = n_list.iter().max().expect("non-empty") * refine_factor;
            solve_ivp(problem, &GridConfig::new(n, method))
                .map_err(|e| CliError::from_ivp(e, rhs))?
                .terminal()
        }
    };
    let errors = n_list
        .par_iter()
        .map(|&n| {
            solve_ivp(problem, &GridConfig::new(n, method))
                .map(|tr| (tr.terminal() - reference).abs())
                .map_err(|e| CliError::from_ivp(e, rhs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let order = (k > 0)
                .then(|| {
                    let (e0, e1) = (errors[k - 1], errors[k]);
                    let measurable =
                        e0 >= MEASURABLE_ERROR && e1 >= MEASURABLE_ERROR && n != n_list[k - 1];
                    measurable.then(|| (e0 / e1).ln() / (n as f64 / n_list[k - 1] as f64).ln())
                })
                .flatten();
            ConvergeRow {
                n_steps: n,
                error: errors[k],
                order,
            }
        })
        .collect())
}
