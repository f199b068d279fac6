//! The Beta policy head math: log-density, entropy, their gradients with
//! respect to the concentration parameters, and sampling via the
//! Marsaglia-Tsang gamma method.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use super::special::{digamma, ln_gamma, trigamma};

#[derive(Debug, Error, PartialEq)]
pub enum BetaError {
    #[error("concentration parameters must be positive, got alpha={0}, beta={1}")]
    InvalidConcentration(f64, f64),
}

/// Actions are clamped away from the support edges before scoring so the
/// log-density stays finite.
pub const BETA_X_EPS: f64 = 1e-6;

pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(BETA_X_EPS, 1.0 - BETA_X_EPS)
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn beta_log_prob(x: f64, a: f64, b: f64) -> Result<f64, BetaError> {
    if a <= 0.0 || b <= 0.0 {
        return Err(BetaError::InvalidConcentration(a, b));
    }
    let x = clamp_unit(x);
    Ok((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta_fn(a, b))
}

/// (d log p / d alpha, d log p / d beta) at the clamped action.
pub fn beta_log_prob_grad(x: f64, a: f64, b: f64) -> (f64, f64) {
    let x = clamp_unit(x);
    let psi_ab = digamma(a + b);
    (x.ln() - digamma(a) + psi_ab, (1.0 - x).ln() - digamma(b) + psi_ab)
}

/// Differential entropy of Beta(a, b).
pub fn beta_entropy(a: f64, b: f64) -> f64 {
    ln_beta_fn(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
        + (a + b - 2.0) * digamma(a + b)
}

/// (dH/da, dH/db).
pub fn beta_entropy_grad(a: f64, b: f64) -> (f64, f64) {
    let tri_ab = trigamma(a + b);
    let common = (a + b - 2.0) * tri_ab;
    (common - (a - 1.0) * trigamma(a), common - (b - 1.0) * trigamma(b))
}

pub fn beta_mean(a: f64, b: f64) -> f64 {
    a / (a + b)
}

/// Marsaglia-Tsang sampler for Gamma(shape, 1), shape > 0.
pub fn sample_gamma(shape: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        // Boost: Gamma(a) = Gamma(a + 1) * U^{1/a}.
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        return sample_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.gen();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Beta(a, b) draw as a ratio of gamma variates, clamped into the open unit
/// interval the scorer uses.
pub fn sample_beta(a: f64, b: f64, rng: &mut impl Rng) -> f64 {
    let ga = sample_gamma(a, rng);
    let gb = sample_gamma(b, rng);
    if ga + gb == 0.0 {
        return 0.5;
    }
    clamp_unit(ga / (ga + gb))
}
