//! A minimal parameter-set abstraction: every network exposes its parameter
//! and gradient buffers as ordered slices, which is all the optimizer, the
//! gradient clipper, the checkpointer and the finite-difference checker need.

/// Visits (parameters, gradients) slice pairs in a stable order.
pub trait ParamSet {
    fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64]));
}

pub fn param_count(net: &mut impl ParamSet) -> usize {
    let mut n = 0;
    net.visit(&mut |p, _| n += p.len());
    n
}

pub fn zero_grads(net: &mut impl ParamSet) {
    net.visit(&mut |_, g| g.iter_mut().for_each(|x| *x = 0.0));
}

/// Global L2 gradient norm across every buffer.
pub fn grad_norm(net: &mut impl ParamSet) -> f64 {
    let mut acc = 0.0;
    net.visit(&mut |_, g| acc += g.iter().map(|x| x * x).sum::<f64>());
    acc.sqrt()
}

/// Scale gradients so the global norm is at most `max_norm`; returns the
/// pre-clip norm.
pub fn clip_grad_norm(net: &mut impl ParamSet, max_norm: f64) -> f64 {
    let norm = grad_norm(net);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        net.visit(&mut |_, g| g.iter_mut().for_each(|x| *x *= scale));
    }
    norm
}

pub fn flatten_params(net: &mut impl ParamSet) -> Vec<f64> {
    let mut out = Vec::new();
    net.visit(&mut |p, _| out.extend_from_slice(p));
    out
}

pub fn load_params(net: &mut impl ParamSet, flat: &[f64]) {
    let mut at = 0;
    net.visit(&mut |p, _| {
        p.copy_from_slice(&flat[at..at + p.len()]);
        at += p.len();
    });
    assert_eq!(at, flat.len(), "parameter count mismatch");
}

pub fn get_param(net: &mut impl ParamSet, idx: usize) -> f64 {
    let mut at = 0;
    let mut out = f64::NAN;
    net.visit(&mut |p, _| {
        if idx >= at && idx < at + p.len() {
            out = p[idx - at];
        }
        at += p.len();
    });
    out
}

pub fn set_param(net: &mut impl ParamSet, idx: usize, value: f64) {
    let mut at = 0;
    net.visit(&mut |p, _| {
        if idx >= at && idx < at + p.len() {
            p[idx - at] = value;
        }
        at += p.len();
    });
}

pub fn get_grad(net: &mut impl ParamSet, idx: usize) -> f64 {
    let mut at = 0;
    let mut out = f64::NAN;
    net.visit(&mut |_, g| {
        if idx >= at && idx < at + g.len() {
            out = g[idx - at];
        }
        at += g.len();
    });
    out
}
