//! Shared policy networks. The default head maps each action dimension to a
//! Beta distribution on [0, 1] (concentrations kept above 1 so the density is
//! unimodal); the baseline head is a diagonal Gaussian squashed through a
//! logistic only at the environment boundary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::neuro::beta::{
    beta_entropy, beta_entropy_grad, beta_log_prob, beta_log_prob_grad, beta_mean, sample_beta,
};
use crate::neuro::gaussian::{
    gaussian_entropy, gaussian_log_prob, gaussian_log_prob_grad, logistic, sample_gaussian,
};
use crate::neuro::matrix::Matrix;
use crate::neuro::mlp::{Mlp, MlpCache};
use crate::neuro::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeadKind {
    Beta,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActorNet {
    pub kind: HeadKind,
    pub body: Mlp,
    pub act_dim: usize,
    /// Gaussian head only: state-independent log standard deviations.
    pub log_std: Vec<f64>,
    pub g_log_std: Vec<f64>,
}

/// One sampled decision. `env_action` lives in the unit cube and feeds the
/// remapper; `score_action` is what the log-density is evaluated on (equal to
/// `env_action` for Beta, the unsquashed draw for Gaussian).
#[derive(Debug, Clone)]
pub struct ActorSample {
    pub env_action: Vec<f64>,
    pub score_action: Vec<f64>,
    pub log_prob: f64,
}

/// Forward state needed to push PPO gradients back through the policy.
pub struct ActorCache {
    mlp: MlpCache,
    z: Matrix,
    actions: Matrix,
}

fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl ActorNet {
    pub fn new(
        obs_dim: usize,
        act_dim: usize,
        hidden: usize,
        kind: HeadKind,
        rng: &mut impl Rng,
    ) -> Self {
        let out = match kind {
            HeadKind::Beta => 2 * act_dim,
            HeadKind::Gaussian => act_dim,
        };
        let log_std_len = if kind == HeadKind::Gaussian { act_dim } else { 0 };
        Self {
            kind,
            body: Mlp::new(&[obs_dim, hidden, out], 0.01, rng),
            act_dim,
            log_std: vec![0.0; log_std_len],
            g_log_std: vec![0.0; log_std_len],
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.body.input_dim()
    }

    fn concentrations(&self, z: &[f64], d: usize) -> (f64, f64) {
        (softplus(z[d]) + 1.0, softplus(z[self.act_dim + d]) + 1.0)
    }

    pub fn sample(&self, obs: &[f64], rng: &mut impl Rng) -> ActorSample {
        let (z, _) = self.body.forward(&Matrix::from_row(obs));
        let z = z.row(0);
        let mut env_action = Vec::with_capacity(self.act_dim);
        let mut score_action = Vec::with_capacity(self.act_dim);
        let mut log_prob = 0.0;
        match self.kind {
            HeadKind::Beta => {
                for d in 0..self.act_dim {
                    let (a, b) = self.concentrations(z, d);
                    let x = sample_beta(a, b, rng);
                    log_prob += beta_log_prob(x, a, b).expect("concentrations > 1");
                    env_action.push(x);
                    score_action.push(x);
                }
            }
            HeadKind::Gaussian => {
                for d in 0..self.act_dim {
                    let y = sample_gaussian(z[d], self.log_std[d], rng);
                    log_prob += gaussian_log_prob(y, z[d], self.log_std[d]);
                    env_action.push(logistic(y));
                    score_action.push(y);
                }
            }
        }
        ActorSample { env_action, score_action, log_prob }
    }

    /// Deterministic action for greedy evaluation.
    pub fn mean_action(&self, obs: &[f64]) -> Vec<f64> {
        let (z, _) = self.body.forward(&Matrix::from_row(obs));
        let z = z.row(0);
        match self.kind {
            HeadKind::Beta => (0..self.act_dim)
                .map(|d| {
                    let (a, b) = self.concentrations(z, d);
                    beta_mean(a, b)
                })
                .collect(),
            HeadKind::Gaussian => (0..self.act_dim).map(|d| logistic(z[d])).collect(),
        }
    }

    /// Score a batch of stored (obs, score_action) pairs. Returns per-sample
    /// log-probabilities and entropies plus the cache for `backward_batch`.
    pub fn evaluate_batch(
        &self,
        obs: &Matrix,
        actions: &Matrix,
    ) -> (Vec<f64>, Vec<f64>, ActorCache) {
        assert_eq!(actions.cols, self.act_dim);
        let (z, mlp) = self.body.forward(obs);
        let n = obs.rows;
        let mut log_probs = Vec::with_capacity(n);
        let mut entropies = Vec::with_capacity(n);
        for t in 0..n {
            let zr = z.row(t);
            let ar = actions.row(t);
            let mut lp = 0.0;
            let mut ent = 0.0;
            match self.kind {
                HeadKind::Beta => {
                    for d in 0..self.act_dim {
                        let (a, b) = self.concentrations(zr, d);
                        lp += beta_log_prob(ar[d], a, b).expect("concentrations > 1");
                        ent += beta_entropy(a, b);
                    }
                }
                HeadKind::Gaussian => {
                    for d in 0..self.act_dim {
                        lp += gaussian_log_prob(ar[d], zr[d], self.log_std[d]);
                        ent += gaussian_entropy(self.log_std[d]);
                    }
                }
            }
            log_probs.push(lp);
            entropies.push(ent);
        }
        (log_probs, entropies, ActorCache { mlp, z, actions: actions.clone() })
    }

    /// Accumulate gradients of `sum_t c_lp[t] * log_prob_t + c_ent[t] * H_t`.
    /// Callers encode the PPO surrogate (and its sign) in the coefficients.
    pub fn backward_batch(&mut self, cache: &ActorCache, c_lp: &[f64], c_ent: &[f64]) {
        let n = cache.z.rows;
        assert_eq!(c_lp.len(), n);
        assert_eq!(c_ent.len(), n);
        let mut dz = Matrix::zeros(cache.z.rows, cache.z.cols);
        for t in 0..n {
            let zr = cache.z.row(t);
            let ar = cache.actions.row(t);
            match self.kind {
                HeadKind::Beta => {
                    for d in 0..self.act_dim {
                        let (a, b) = self.concentrations(zr, d);
                        let (lp_a, lp_b) = beta_log_prob_grad(ar[d], a, b);
                        let (h_a, h_b) = beta_entropy_grad(a, b);
                        let da = c_lp[t] * lp_a + c_ent[t] * h_a;
                        let db = c_lp[t] * lp_b + c_ent[t] * h_b;
                        dz.set(t, d, da * sigmoid(zr[d]));
                        dz.set(t, self.act_dim + d, db * sigmoid(zr[self.act_dim + d]));
                    }
                }
                HeadKind::Gaussian => {
                    for d in 0..self.act_dim {
                        let (lp_m, lp_ls) = gaussian_log_prob_grad(ar[d], zr[d], self.log_std[d]);
                        dz.set(t, d, c_lp[t] * lp_m);
                        // Entropy depends only on log_std; dH/dlog_std = 1.
                        self.g_log_std[d] += c_lp[t] * lp_ls + c_ent[t];
                    }
                }
            }
        }
        self.body.backward(&cache.mlp, &dz);
    }
}

impl ParamSet for ActorNet {
    fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        self.body.visit(f);
        if !self.log_std.is_empty() {
            f(&mut self.log_std, &mut self.g_log_std);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuro::gradcheck::max_rel_grad_error;
    use crate::neuro::params::zero_grads;
    use crate::rng::{stream, StreamTag};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn obs_batch(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = stream(seed, StreamTag::Init, 0, 0, 50);
        Matrix::from_rows((0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect())
    }

    #[test]
    fn sampling_contract() {
        let mut init = stream(1, StreamTag::Init, 0, 0, 0);
        for kind in [HeadKind::Beta, HeadKind::Gaussian] {
            let actor = ActorNet::new(5, 3, 16, kind, &mut init);
            let obs = [0.1, 0.4, 0.9, 0.2, 0.6];
            let mut rng = stream(1, StreamTag::Policy, 0, 0, 0);
            let s = actor.sample(&obs, &mut rng);
            assert_eq!(s.env_action.len(), 3);
            assert!(s.env_action.iter().all(|&x| (0.0..=1.0).contains(&x)));
            assert!(s.log_prob.is_finite());
            // Same stream address reproduces the draw exactly.
            let mut rng2 = stream(1, StreamTag::Policy, 0, 0, 0);
            let s2 = actor.sample(&obs, &mut rng2);
            assert_eq!(s.score_action, s2.score_action);
            // Greedy action also lives in the unit cube.
            let g = actor.mean_action(&obs);
            assert!(g.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn evaluate_agrees_with_sample_log_prob() {
        let mut init = stream(2, StreamTag::Init, 0, 0, 0);
        for kind in [HeadKind::Beta, HeadKind::Gaussian] {
            let actor = ActorNet::new(4, 2, 12, kind, &mut init);
            let mut rng = stream(2, StreamTag::Policy, 0, 0, 1);
            let obs: Vec<Vec<f64>> = (0..6).map(|i| vec![0.1 * i as f64; 4]).collect();
            let mut actions = Vec::new();
            let mut lps = Vec::new();
            for o in &obs {
                let s = actor.sample(o, &mut rng);
                actions.push(s.score_action);
                lps.push(s.log_prob);
            }
            let (lp, ent, _) = actor.evaluate_batch(
                &Matrix::from_rows(obs),
                &Matrix::from_rows(actions),
            );
            for (a, b) in lp.iter().zip(&lps) {
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
            assert!(ent.iter().all(|e| e.is_finite()));
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut init = stream(3, StreamTag::Init, 0, 0, 0);
        for kind in [HeadKind::Beta, HeadKind::Gaussian] {
            let mut actor = ActorNet::new(3, 2, 6, kind, &mut init);
            let obs = obs_batch(4, 3, 9);
            let mut rng = stream(3, StreamTag::Policy, 0, 0, 2);
            let actions = Matrix::from_rows(
                (0..4).map(|r| actor.sample(obs.row(r), &mut rng).score_action).collect(),
            );
            let c_lp = [0.7, -1.3, 0.2, 0.9];
            let c_ent = [0.01, 0.05, -0.02, 0.03];
            let loss = |net: &mut ActorNet| {
                let (lp, ent, _) = net.evaluate_batch(&obs, &actions);
                lp.iter().zip(&c_lp).map(|(l, c)| l * c).sum::<f64>()
                    + ent.iter().zip(&c_ent).map(|(e, c)| e * c).sum::<f64>()
            };
            zero_grads(&mut actor);
            let (_, _, cache) = actor.evaluate_batch(&obs, &actions);
            actor.backward_batch(&cache, &c_lp, &c_ent);
            let err = max_rel_grad_error(&mut actor, loss, 1e-5);
            assert!(err < 1e-5, "{kind:?}: max relative gradient error {err}");
        }
    }
}
