//! Fractional Adams–Bashforth–Moulton, P(EC)^k E.

use crate::fastconv::ConvolutionPlan;
use crate::mlf::gamma;

use super::{abm_kernels, eval_rhs, grid_times, GridConfig, IvpError, IvpProblem, Trajectory};

pub(super) fn solve<F: Fn(f64, f64) -> f64>(
    p: &IvpProblem<F>,
    g: &GridConfig,
) -> Result<Trajectory, IvpError> {
    let n = g.n_steps;
    let h = p.horizon / n as f64;
    let ha = h.powf(p.alpha);
    let pred_scale = ha / gamma(p.alpha + 1.0);
    let corr_scale = ha / gamma(p.alpha + 2.0);

    let kernels = abm_kernels(p.alpha, n)?;
    // predictor: S_{n+1} = Σ_{j≤n} b_{n-j} f_j, i.e. w_k = b_{k-1}
    let pred_plan =
        ConvolutionPlan::with_default_block(kernels.predictor).expect("kernel is non-empty");
    // corrector: Σ_{1≤j≤n} d_{n+1-j} f_j; f_0 enters through c_{0,n+1}
    let corr_plan =
        ConvolutionPlan::with_default_block(kernels.corrector).expect("kernel is non-empty");
    let mut pred = pred_plan.stream();
    let mut corr = corr_plan.stream();

    let times = grid_times(p.horizon, n);
    let mut values = Vec::with_capacity(n + 1);
    let mut rhs_values = Vec::with_capacity(n + 1);
    values.push(p.y0);
    let f0 = eval_rhs(&p.rhs, 0.0, p.y0)?;
    rhs_values.push(f0);

    for k in 0..n {
        let fk = rhs_values[k];
        let s_pred = pred.advance(fk);
        let s_corr = corr.advance(if k == 0 { 0.0 } else { fk });
        let t = times[k + 1];
        let taylor = p.y0 + p.y0prime * t;

        let mut y = taylor + pred_scale * s_pred;
        let base = taylor + corr_scale * (kernels.boundary[k] * f0 + s_corr);
        for _ in 0..g.corrector_sweeps {
            let f = eval_rhs(&p.rhs, t, y)?;
            y = base + corr_scale * f;
        }
        values.push(y);
        rhs_values.push(eval_rhs(&p.rhs, t, y)?);
    }

    Ok(Trajectory {
        step: h,
        times,
        values,
        rhs_values,
    })
}
