use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::experiments::{self, FIGURE1_SLOPES};
use super::output::{format_significant, json_string, trajectory_csv, write_file};
use super::{
    CliError, Command, ConvergeArgs, Figure1Args, HorizonArgs, MlArgs, SolveBvpArgs, SolveIvpArgs,
    Table1Args, REPORT_SCHEMA,
};
use crate::analysis::{uniqueness_horizon, Intersection};
use crate::expr::Expression;
use crate::ivp::{solve_ivp, IvpProblem, Method, Trajectory};
use crate::mlf::{mittag_leffler, MlError};
use crate::shooting::{solve_bvp, BvpProblem, ShootingConfig, ShootingError, ShootingReport};

pub(super) fn execute(
    cmd: Command,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    match cmd {
        Command::SolveBvp(a) => solve_bvp_cmd(a, out, err),
        Command::SolveIvp(a) => solve_ivp_cmd(a, out, err),
        Command::Table1(a) => table1_cmd(a, out),
        Command::Figure1(a) => figure1_cmd(a, out),
        Command::Converge(a) => converge_cmd(a, out),
        Command::Ml(a) => ml_cmd(a, out),
        Command::Horizon(a) => horizon_cmd(a, out),
    }
}

fn parse_rhs(src: &str) -> Result<Expression, CliError> {
    Expression::parse(src)
        .map_err(|e| CliError::Usage(format!("cannot parse --rhs\n{}", e.render(src))))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

/// CSV to `path`, or to `out` when no path is given.
fn emit_csv(path: Option<&Path>, tr: &Trajectory, out: &mut dyn Write) -> Result<(), CliError> {
    let csv = trajectory_csv(tr);
    match path {
        Some(p) => write_file(p, &csv),
        None => emit(out, &csv),
    }
}

fn elapsed_ms(start: Instant, enabled: bool) -> Option<f64> {
    enabled.then(|| start.elapsed().as_secs_f64() * 1e3)
}

#[derive(Serialize)]
struct BvpInputs<'a> {
    alpha: f64,
    t_end: f64,
    b0: f64,
    b1: f64,
    rhs: &'a str,
    method: Method,
    n_steps: usize,
    step: f64,
    tol: f64,
    max_iter: usize,
}

#[derive(Serialize)]
struct BvpReport<'a> {
    schema: u32,
    command: &'static str,
    inputs: BvpInputs<'a>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    shooting: Option<&'a ShootingReport>,
    csv: Option<&'a Path>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn solve_bvp_cmd(
    a: SolveBvpArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let start = Instant::now();
    let expr = parse_rhs(&a.rhs)?;
    let method = Method::from(a.method);
    let rhs = |t: f64, y: f64| expr.value(t, y);
    let problem = BvpProblem::new(a.alpha, a.t_end, a.b0, a.b1, rhs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = a.resolution.grid(a.t_end, method)?;
    let mut config = ShootingConfig::new(a.tol);
    config.max_iter = a.max_iter;

    let result = solve_bvp(&problem, &grid, &config);
    let (status, report, error) = match &result {
        Ok((_, rep)) => ("converged", Some(rep), None),
        Err(e) => {
            let status = match e {
                ShootingError::NotConverged { .. } => "not_converged",
                ShootingError::DegenerateSecant { .. } => "degenerate_secant",
                ShootingError::Ivp { .. } => "ivp_failure",
                ShootingError::BadConfig(_) => "invalid_config",
            };
            (status, e.report(), Some(e.to_string()))
        }
    };
    if let Ok((tr, _)) = &result {
        emit_csv(a.out.as_deref(), tr, out)?;
    }
    if let Some(path) = &a.report {
        let rep = BvpReport {
            schema: REPORT_SCHEMA,
            command: "solve-bvp",
            inputs: BvpInputs {
                alpha: a.alpha,
                t_end: a.t_end,
                b0: a.b0,
                b1: a.b1,
                rhs: &a.rhs,
                method,
                n_steps: grid.n_steps,
                step: grid.step(a.t_end),
                tol: a.tol,
                max_iter: a.max_iter,
            },
            status,
            error,
            shooting: report,
            csv: a.out.as_deref().filter(|_| result.is_ok()),
            wall_time_ms: elapsed_ms(start, a.timings),
        };
        write_file(path, &json_string(&rep))?;
    }
    let (_, rep) = result.map_err(|e| CliError::from_shooting(e, Some(&expr)))?;
    let summary = format!(
        "converged: {} iterations, residual {:.3e}, slope {:.16e}\n",
        rep.ivp_solve_count,
        rep.final_residual().unwrap_or(0.0),
        rep.iterations.last().map_or(f64::NAN, |r| r.slope),
    );
    // keep stdout pure CSV when the trajectory goes there
    if a.out.is_some() {
        emit(out, &summary)
    } else {
        let _ = err.write_all(summary.as_bytes());
        Ok(())
    }
}

fn solve_ivp_cmd(
    a: SolveIvpArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let expr = parse_rhs(&a.rhs)?;
    let method = Method::from(a.method);
    let rhs = |t: f64, y: f64| expr.value(t, y);
    let problem = IvpProblem::new(a.alpha, a.t_end, a.y0, a.yp0, rhs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = a.resolution.grid(a.t_end, method)?;
    let tr = solve_ivp(&problem, &grid).map_err(|e| CliError::from_ivp(e, Some(&expr)))?;
    emit_csv(a.out.as_deref(), &tr, out)?;
    let summary = format!("y({}) = {:.16e}\n", a.t_end, tr.terminal());
    if a.out.is_some() {
        emit(out, &summary)
    } else {
        let _ = err.write_all(summary.as_bytes());
        Ok(())
    }
}

#[derive(Serialize)]
struct Table1Report<'a> {
    schema: u32,
    command: &'static str,
    #[serde(flatten)]
    table: &'a experiments::Table1,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn table1_cmd(a: Table1Args, out: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let table = experiments::table1(a.step_scale, a.reference_factor)?;
    let r = &table.reference;
    let mut text = format!(
        "reference: BDF2, h = 1/{} (N = {}), {} iterations; vs h = 1/{}: |dy(T)| = {:.2e}, max |dy| = {:.2e}\n",
        r.step_denominator,
        r.n_steps,
        r.iterations,
        r.step_denominator / 2,
        r.self_test_terminal_diff,
        r.self_test_max_diff,
    );
    text.push_str(&format!(
        "{:<10} {:>9} {:>10} {:>10}\n",
        "step", "requested", "iterations", "max error"
    ));
    for row in &table.rows {
        text.push_str(&format!(
            "{:<10} {:>9} {:>10} {:>10.2e}\n",
            format!("1/{}", row.step_denominator),
            format!("{:e}", row.tol),
            row.iterations,
            row.max_error,
        ));
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        let rep = Table1Report {
            schema: REPORT_SCHEMA,
            command: "table1",
            table: &table,
            wall_time_ms: elapsed_ms(start, a.timings),
        };
        write_file(path, &json_string(&rep))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Figure1Report {
    schema: u32,
    command: &'static str,
    h: f64,
    t_end: f64,
    method: Method,
    slopes: (f64, f64),
    intersection: Option<Intersection>,
    csv: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn figure1_cmd(a: Figure1Args, out: &mut dyn Write) -> Result<(), CliError> {
    let start = Instant::now();
    let method = Method::from(a.method);
    let fig = experiments::figure1(a.h, a.t_end, method)?;
    let mut csv = Vec::new();
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for (name, tr) in [
            ("figure1_y1.csv", &fig.first),
            ("figure1_y2.csv", &fig.second),
        ] {
            let path = dir.join(name);
            write_file(&path, &trajectory_csv(tr))?;
            csv.push(path);
        }
    }
    if let Some(path) = &a.report {
        let rep = Figure1Report {
            schema: REPORT_SCHEMA,
            command: "figure1",
            h: a.h,
            t_end: a.t_end,
            method,
            slopes: FIGURE1_SLOPES,
            intersection: fig.intersection,
            csv,
            wall_time_ms: elapsed_ms(start, a.timings),
        };
        write_file(path, &json_string(&rep))?;
    }
    match fig.intersection {
        Some(x) => emit(
            out,
            &format!("t* = {:.6}\ny* = {:.6}\n", x.t_star, x.y_star),
        ),
        None => Err(CliError::Inconclusive(format!(
            "no intersection on [0, {}]: the trajectories with y'(0) = {} and {} do not cross",
            a.t_end, FIGURE1_SLOPES.0, FIGURE1_SLOPES.1
        ))),
    }
}

#[derive(Serialize)]
struct ConvergeReport<'a> {
    schema: u32,
    command: &'static str,
    rhs: &'a str,
    method: Method,
    rows: &'a [experiments::ConvergeRow],
}

fn converge_cmd(a: ConvergeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let expr = parse_rhs(&a.rhs)?;
    let method = Method::from(a.method);
    let rhs = |t: f64, y: f64| expr.value(t, y);
    let problem = IvpProblem::new(a.alpha, a.t_end, a.y0, a.yp0, rhs)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = experiments::converge(
        &problem,
        method,
        &a.n_list,
        a.exact,
        a.refine_factor,
        Some(&expr),
    )?;
    let mut text = format!("{:>8} {:>12} {:>8}\n", "N", "error", "order");
    for (k, row) in rows.iter().enumerate() {
        let order = match (k, row.order) {
            (0, _) => "-".to_string(),
            (_, Some(p)) => format!("{p:.3}"),
            (_, None) => "order not measurable".to_string(),
        };
        text.push_str(&format!(
            "{:>8} {:>12.4e} {:>8}\n",
            row.n_steps, row.error, order
        ));
    }
    emit(out, &text)?;
    if let Some(path) = &a.json {
        let rep = ConvergeReport {
            schema: REPORT_SCHEMA,
            command: "converge",
            rhs: &a.rhs,
            method,
            rows: &rows,
        };
        write_file(path, &json_string(&rep))?;
    }
    Ok(())
}

fn ml_cmd(a: MlArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let v = mittag_leffler(a.alpha, a.beta, a.z).map_err(|e| match e {
        MlError::Domain(_) => CliError::Usage(e.to_string()),
        MlError::Overflow { .. } => CliError::Numerical(e.to_string()),
    })?;
    emit(out, &format!("{}\n", format_significant(v, 15)))
}

fn horizon_cmd(a: HorizonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let t = uniqueness_horizon(a.alpha, a.a_lower).map_err(|e| CliError::from_analysis(e, None))?;
    emit(out, &format!("{}\n", format_significant(t, 15)))
}
