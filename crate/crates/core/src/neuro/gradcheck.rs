//! Central-difference gradient verification for anything implementing
//! `ParamSet`. Analytic gradients must already be stored in the net's
//! gradient buffers; the loss closure must be a pure forward evaluation.

use super::params::{get_grad, get_param, param_count, set_param, ParamSet};

/// Maximum relative error between stored analytic gradients and central
/// differences of `loss` over every parameter.
pub fn max_rel_grad_error<N: ParamSet>(
    net: &mut N,
    mut loss: impl FnMut(&mut N) -> f64,
    h: f64,
) -> f64 {
    let n = param_count(net);
    let mut worst = 0.0f64;
    for i in 0..n {
        let saved = get_param(net, i);
        set_param(net, i, saved + h);
        let hi = loss(net);
        set_param(net, i, saved - h);
        let lo = loss(net);
        set_param(net, i, saved);
        let numeric = (hi - lo) / (2.0 * h);
        let analytic = get_grad(net, i);
        let denom = numeric.abs().max(analytic.abs()).max(1.0);
        worst = worst.max((numeric - analytic).abs() / denom);
    }
    worst
}
