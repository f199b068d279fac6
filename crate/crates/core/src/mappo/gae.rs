//! Generalized advantage estimation over one fixed-length episode.

/// Backward-recursive GAE. `values` has one entry per step; `last_value`
/// bootstraps past the horizon (zero for a terminal truncation). Returns
/// (advantages, value targets).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len());
    let t_max = rewards.len();
    let mut adv = vec![0.0; t_max];
    let mut acc = 0.0;
    for t in (0..t_max).rev() {
        let next_v = if t + 1 < t_max { values[t + 1] } else { last_value };
        let delta = rewards[t] + gamma * next_v - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    /// O(T^2) definition: A_t = sum_l (gamma lambda)^l delta_{t+l}.
    fn brute_force(r: &[f64], v: &[f64], last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
        let t_max = r.len();
        let delta: Vec<f64> = (0..t_max)
            .map(|t| {
                let next = if t + 1 < t_max { v[t + 1] } else { last };
                r[t] + gamma * next - v[t]
            })
            .collect();
        (0..t_max)
            .map(|t| {
                let mut acc = 0.0;
                let mut w = 1.0;
                for l in t..t_max {
                    acc += w * delta[l];
                    w *= gamma * lambda;
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = stream(1, StreamTag::Init, 0, 0, 0);
        for _ in 0..20 {
            let t_max = rng.gen_range(1..40);
            let r: Vec<f64> = (0..t_max).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..t_max).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let last = rng.gen_range(-2.0..2.0);
            let (adv, ret) = gae(&r, &v, last, 0.95, 0.9);
            let expect = brute_force(&r, &v, last, 0.95, 0.9);
            for t in 0..t_max {
                assert_relative_eq!(adv[t], expect[t], max_relative = 1e-12, epsilon = 1e-12);
                assert_abs_diff_eq!(ret[t], adv[t] + v[t], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let r = [1.0, 2.0, 3.0];
        let v = [0.5, 0.6, 0.7];
        let (adv, _) = gae(&r, &v, 0.9, 0.8, 0.0);
        assert_abs_diff_eq!(adv[0], 1.0 + 0.8 * 0.6 - 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(adv[2], 3.0 + 0.8 * 0.9 - 0.7, epsilon = 1e-12);
    }

    #[test]
    fn lambda_one_is_discounted_return_minus_value() {
        let r = [1.0, 1.0, 1.0, 1.0];
        let v = [0.0, 0.0, 0.0, 0.0];
        let (adv, _) = gae(&r, &v, 0.0, 0.5, 1.0);
        // Discounted returns: 1 + 0.5 + 0.25 + 0.125.
        assert_abs_diff_eq!(adv[0], 1.875, epsilon = 1e-12);
        assert_abs_diff_eq!(adv[3], 1.0, epsilon = 1e-12);
    }
}
