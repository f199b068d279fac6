//! Diagonal Gaussian head math for the Gaussian-policy baseline. Scores are
//! computed in the unsquashed space; the environment-facing action is the
//! logistic squash of the sample.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

pub fn gaussian_log_prob(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) / log_std.exp();
    -0.5 * z * z - log_std - HALF_LN_TWO_PI
}

/// (d log p / d mean, d log p / d log_std).
pub fn gaussian_log_prob_grad(x: f64, mean: f64, log_std: f64) -> (f64, f64) {
    let var = (2.0 * log_std).exp();
    let diff = x - mean;
    (diff / var, diff * diff / var - 1.0)
}

/// Per-dimension entropy; its gradient in log_std is identically 1.
pub fn gaussian_entropy(log_std: f64) -> f64 {
    0.5 + HALF_LN_TWO_PI + log_std
}

pub fn sample_gaussian(mean: f64, log_std: f64, rng: &mut impl Rng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + log_std.exp() * z
}

/// Logistic squash mapping the unbounded sample into the unit interval.
pub fn logistic(y: f64) -> f64 {
    1.0 / (1.0 + (-y).exp())
}
