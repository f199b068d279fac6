//! Adam over the flattened parameter vector of a `ParamSet`.

use serde::{Deserialize, Serialize};

use super::params::ParamSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, num_params: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    /// Moment state for exact checkpoint resume.
    pub fn state(&self) -> (u64, &[f64], &[f64]) {
        (self.t, &self.m, &self.v)
    }

    pub fn restore(&mut self, t: u64, m: Vec<f64>, v: Vec<f64>) {
        assert_eq!(m.len(), self.m.len(), "optimizer state length mismatch");
        assert_eq!(v.len(), self.v.len(), "optimizer state length mismatch");
        self.t = t;
        self.m = m;
        self.v = v;
    }

    /// One update from the gradients currently stored in the net.
    pub fn step(&mut self, net: &mut impl ParamSet) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut at = 0;
        net.visit(&mut |p, g| {
            for i in 0..p.len() {
                let slot = at + i;
                self.m[slot] = self.beta1 * self.m[slot] + (1.0 - self.beta1) * g[i];
                self.v[slot] = self.beta2 * self.v[slot] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = self.m[slot] / bc1;
                let v_hat = self.v[slot] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            at += p.len();
        });
        assert_eq!(at, self.m.len(), "optimizer sized for a different net");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuro::params::zero_grads;

    /// A bare parameter vector for optimizer tests.
    struct Raw {
        p: Vec<f64>,
        g: Vec<f64>,
    }

    impl ParamSet for Raw {
        fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
            f(&mut self.p, &mut self.g);
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = Raw { p: vec![1.0, -2.0], g: vec![0.3, -7.0] };
        let mut opt = Adam::new(0.01, 2);
        opt.step(&mut net);
        // Bias-corrected first step is lr * sign(g) up to eps.
        assert!((net.p[0] - (1.0 - 0.01)).abs() < 1e-6);
        assert!((net.p[1] - (-2.0 + 0.01)).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let target = [3.0, -1.5, 0.25];
        let mut net = Raw { p: vec![0.0; 3], g: vec![0.0; 3] };
        let mut opt = Adam::new(0.05, 3);
        for _ in 0..2000 {
            zero_grads(&mut net);
            for i in 0..3 {
                net.g[i] = 2.0 * (net.p[i] - target[i]);
            }
            opt.step(&mut net);
        }
        for i in 0..3 {
            assert!((net.p[i] - target[i]).abs() < 1e-3, "param {i}: {}", net.p[i]);
        }
    }
}
