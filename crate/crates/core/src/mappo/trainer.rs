//! The CTDE training loop: shared per-type actors, centralized per-type
//! critics, PPO with clipping, and per-type discount factors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{
    mu_raw_dim, remap_mu_action, remap_uav_actions, uav_raw_dim, Env, EnvConfig, MuAction,
    StepReport, UavAction,
};
use crate::neuro::matrix::Matrix;
use crate::neuro::params::{clip_grad_norm, param_count, zero_grads};
use crate::neuro::Adam;
use crate::rng::{stream, StreamTag};

use super::actor::{ActorNet, HeadKind};
use super::critic::{AgentType, AttnDims, CriticNet, StateBatch};
use super::gae::gae;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Attention critic, Beta actors.
    AbMappo,
    /// Flat critic, Beta actors.
    BMappo,
    /// Attention critic, squashed Gaussian actors.
    AgMappo,
    /// Uniform random actions, no learning.
    Random,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ab-mappo" => Some(Self::AbMappo),
            "b-mappo" => Some(Self::BMappo),
            "ag-mappo" => Some(Self::AgMappo),
            "random" => Some(Self::Random),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AbMappo => "ab-mappo",
            Self::BMappo => "b-mappo",
            Self::AgMappo => "ag-mappo",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma_mu: f64,
    pub gamma_uav: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub ppo_epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub attn: AttnDims,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 267,
            gamma_mu: 0.8,
            gamma_uav: 0.95,
            gae_lambda: 0.95,
            clip: 0.2,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            ppo_epochs: 5,
            lr: 3e-4,
            hidden: 128,
            attn: AttnDims::default(),
        }
    }
}

/// Per-episode aggregates, averaged over agents and slots where sensible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: u64,
    pub steps: usize,
    pub mean_mu_reward: f64,
    pub mean_uav_reward: f64,
    /// Mean per-slot weighted system energy (the objective).
    pub weighted_energy: f64,
    pub jain_index: f64,
    /// Episode total of latency, boundary and collision penalties.
    pub penalty_total: f64,
    pub mean_mu_energy: f64,
    pub mean_uav_energy: f64,
}

impl EpisodeStats {
    fn from_reports(episode: u64, reports: &[StepReport]) -> Self {
        let steps = reports.len();
        let t = steps as f64;
        let k = reports[0].mu_rewards.len() as f64;
        let m = reports[0].uav_rewards.len() as f64;
        let sum = |f: &dyn Fn(&StepReport) -> f64| reports.iter().map(f).sum::<f64>();
        Self {
            episode,
            steps,
            mean_mu_reward: sum(&|r| r.mu_rewards.iter().sum::<f64>()) / (t * k),
            mean_uav_reward: sum(&|r| r.uav_rewards.iter().sum::<f64>()) / (t * m),
            weighted_energy: sum(&|r| r.objective) / t,
            jain_index: sum(&|r| r.jain_index) / t,
            penalty_total: sum(&|r| r.total_penalty()),
            mean_mu_energy: sum(&|r| r.mu_energies.iter().sum::<f64>()) / (t * k),
            mean_uav_energy: sum(&|r| r.uav_energies.iter().sum::<f64>()) / (t * m),
        }
    }
}

/// One agent group's episode buffer, t-major (`t * n + i`).
struct GroupRollout {
    n: usize,
    t_len: usize,
    obs: Matrix,
    actions: Matrix,
    log_probs: Vec<f64>,
    rewards: Vec<f64>,
}

pub struct Trainer {
    pub env: Env,
    pub variant: Variant,
    pub tc: TrainConfig,
    pub actor_mu: ActorNet,
    pub actor_uav: ActorNet,
    pub critic_mu: CriticNet,
    pub critic_uav: CriticNet,
    pub opt_actor_mu: Adam,
    pub opt_actor_uav: Adam,
    pub opt_critic_mu: Adam,
    pub opt_critic_uav: Adam,
    pub next_episode: u64,
    seed: u64,
}

impl Trainer {
    pub fn new(cfg: EnvConfig, tc: TrainConfig, variant: Variant, seed: u64) -> Self {
        let env = Env::new(cfg, seed);
        let cfg = &env.cfg;
        let mu_obs = 2 + 2 * cfg.num_uavs + 2 + cfg.num_uavs;
        let uav_obs = 5 * cfg.num_mus + 2 + 2 * (cfg.num_uavs - 1);
        let head = match variant {
            Variant::AgMappo => HeadKind::Gaussian,
            _ => HeadKind::Beta,
        };
        let init = |entity: u64| stream(seed, StreamTag::Init, 0, 0, entity);
        let mut actor_mu =
            ActorNet::new(mu_obs, mu_raw_dim(cfg.num_uavs), tc.hidden, head, &mut init(0));
        let mut actor_uav =
            ActorNet::new(uav_obs, uav_raw_dim(cfg.num_mus), tc.hidden, head, &mut init(1));
        let build_critic = |own, rng: &mut _| match variant {
            Variant::BMappo => {
                CriticNet::new_flat(own, mu_obs, uav_obs, cfg.num_mus, cfg.num_uavs, tc.hidden, rng)
            }
            _ => CriticNet::new_attention(own, mu_obs, uav_obs, tc.attn, tc.hidden, rng),
        };
        let mut critic_mu = build_critic(AgentType::Mu, &mut init(2));
        let mut critic_uav = build_critic(AgentType::Uav, &mut init(3));
        let opt_actor_mu = Adam::new(tc.lr, param_count(&mut actor_mu));
        let opt_actor_uav = Adam::new(tc.lr, param_count(&mut actor_uav));
        let opt_critic_mu = Adam::new(tc.lr, param_count(&mut critic_mu));
        let opt_critic_uav = Adam::new(tc.lr, param_count(&mut critic_uav));
        Self {
            env,
            variant,
            tc,
            actor_mu,
            actor_uav,
            critic_mu,
            critic_uav,
            opt_actor_mu,
            opt_actor_uav,
            opt_critic_mu,
            opt_critic_uav,
            next_episode: 0,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Collect one episode and, for learning variants, run the PPO update.
    /// Returns the behavior-policy episode statistics.
    pub fn run_episode(&mut self) -> EpisodeStats {
        let episode = self.next_episode;
        self.next_episode += 1;
        let (mu_roll, uav_roll, sb, stats) = self.collect(episode);
        if self.variant != Variant::Random {
            self.update_group(true, &mu_roll, &sb);
            self.update_group(false, &uav_roll, &sb);
        }
        stats
    }

    fn collect(&mut self, episode: u64) -> (GroupRollout, GroupRollout, StateBatch, EpisodeStats) {
        let k = self.env.cfg.num_mus;
        let m = self.env.cfg.num_uavs;
        let t_len = self.env.cfg.slots_per_period;
        self.env.reset(episode);
        let mut mu_roll = GroupRollout {
            n: k,
            t_len,
            obs: Matrix::zeros(t_len * k, self.actor_mu.obs_dim()),
            actions: Matrix::zeros(t_len * k, mu_raw_dim(m)),
            log_probs: vec![0.0; t_len * k],
            rewards: vec![0.0; t_len * k],
        };
        let mut uav_roll = GroupRollout {
            n: m,
            t_len,
            obs: Matrix::zeros(t_len * m, self.actor_uav.obs_dim()),
            actions: Matrix::zeros(t_len * m, uav_raw_dim(k)),
            log_probs: vec![0.0; t_len * m],
            rewards: vec![0.0; t_len * m],
        };
        let mut sb = StateBatch {
            t_len,
            num_mus: k,
            num_uavs: m,
            mu_obs: Matrix::zeros(t_len * k, self.actor_mu.obs_dim()),
            uav_obs: Matrix::zeros(t_len * m, self.actor_uav.obs_dim()),
        };
        let mut reports = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let slot = t as u64;
            let mut mu_actions: Vec<MuAction> = Vec::with_capacity(k);
            for ku in 0..k {
                let obs = self.env.observe_mu(ku, true);
                let mut rng = stream(self.seed, StreamTag::Policy, episode, slot, ku as u64);
                let (env_a, score_a, lp) = self.act(&self.actor_mu, &obs, &mut rng);
                mu_actions.push(remap_mu_action(&env_a, m));
                let row = t * k + ku;
                mu_roll.obs.row_mut(row).copy_from_slice(&obs);
                mu_roll.actions.row_mut(row).copy_from_slice(&score_a);
                mu_roll.log_probs[row] = lp;
            }
            let mut uav_raws: Vec<Vec<f64>> = Vec::with_capacity(m);
            for mu in 0..m {
                let obs = self.env.observe_uav(mu, &mu_actions, true);
                let mut rng =
                    stream(self.seed, StreamTag::Policy, episode, slot, (k + mu) as u64);
                let (env_a, score_a, lp) = self.act(&self.actor_uav, &obs, &mut rng);
                uav_raws.push(env_a);
                let row = t * m + mu;
                uav_roll.obs.row_mut(row).copy_from_slice(&obs);
                uav_roll.actions.row_mut(row).copy_from_slice(&score_a);
                uav_roll.log_probs[row] = lp;
            }
            for ku in 0..k {
                sb.mu_obs.row_mut(t * k + ku).copy_from_slice(&self.env.observe_mu(ku, false));
            }
            for mu in 0..m {
                sb.uav_obs
                    .row_mut(t * m + mu)
                    .copy_from_slice(&self.env.observe_uav(mu, &mu_actions, false));
            }
            let uav_actions: Vec<UavAction> =
                remap_uav_actions(&uav_raws, &mu_actions, &self.env.cfg);
            let report = self.env.step(&mu_actions, &uav_actions);
            for ku in 0..k {
                mu_roll.rewards[t * k + ku] = report.mu_rewards[ku];
            }
            for mu in 0..m {
                uav_roll.rewards[t * m + mu] = report.uav_rewards[mu];
            }
            reports.push(report);
        }
        let stats = EpisodeStats::from_reports(episode, &reports);
        (mu_roll, uav_roll, sb, stats)
    }

    fn act(
        &self,
        actor: &ActorNet,
        obs: &[f64],
        rng: &mut impl Rng,
    ) -> (Vec<f64>, Vec<f64>, f64) {
        if self.variant == Variant::Random {
            let raw: Vec<f64> = (0..actor.act_dim).map(|_| rng.gen()).collect();
            return (raw.clone(), raw, 0.0);
        }
        let s = actor.sample(obs, rng);
        (s.env_action, s.score_action, s.log_prob)
    }

    fn update_group(&mut self, is_mu: bool, roll: &GroupRollout, sb: &StateBatch) {
        let gamma = if is_mu { self.tc.gamma_mu } else { self.tc.gamma_uav };
        let (critic, opt_critic) = if is_mu {
            (&mut self.critic_mu, &mut self.opt_critic_mu)
        } else {
            (&mut self.critic_uav, &mut self.opt_critic_uav)
        };
        let n = roll.n;
        let t_len = roll.t_len;
        let total = n * t_len;

        // Value estimates under the pre-update critic define the advantages.
        let (values, _) = critic.forward_batch(sb);
        let mut advantages = vec![0.0; total];
        let mut returns = vec![0.0; total];
        for i in 0..n {
            let r: Vec<f64> = (0..t_len).map(|t| roll.rewards[t * n + i]).collect();
            let v: Vec<f64> = (0..t_len).map(|t| values[t * n + i]).collect();
            let (adv, ret) = gae(&r, &v, 0.0, gamma, self.tc.gae_lambda);
            for t in 0..t_len {
                advantages[t * n + i] = adv[t];
                returns[t * n + i] = ret[t];
            }
        }
        // Batch-normalized advantages.
        let mean = advantages.iter().sum::<f64>() / total as f64;
        let var = advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / total as f64;
        let scale = 1.0 / (var.sqrt() + 1e-8);
        for a in &mut advantages {
            *a = (*a - mean) * scale;
        }

        let (actor, opt_actor) = if is_mu {
            (&mut self.actor_mu, &mut self.opt_actor_mu)
        } else {
            (&mut self.actor_uav, &mut self.opt_actor_uav)
        };
        let inv_n = 1.0 / total as f64;
        for _ in 0..self.tc.ppo_epochs {
            // Policy: clipped surrogate plus entropy bonus, full batch.
            let (log_probs, _, cache) = actor.evaluate_batch(&roll.obs, &roll.actions);
            let mut c_lp = vec![0.0; total];
            let mut c_ent = vec![0.0; total];
            for j in 0..total {
                let ratio = (log_probs[j] - roll.log_probs[j]).exp();
                let adv = advantages[j];
                let unclipped = ratio * adv;
                let clipped = ratio.clamp(1.0 - self.tc.clip, 1.0 + self.tc.clip) * adv;
                // Gradient flows only through the unclipped branch of min().
                if unclipped <= clipped {
                    c_lp[j] = -inv_n * unclipped;
                }
                c_ent[j] = -inv_n * self.tc.entropy_coef;
            }
            zero_grads(actor);
            actor.backward_batch(&cache, &c_lp, &c_ent);
            clip_grad_norm(actor, self.tc.max_grad_norm);
            opt_actor.step(actor);

            // Value regression onto the GAE returns.
            let (v, vcache) = critic.forward_batch(sb);
            let dv: Vec<f64> =
                v.iter().zip(&returns).map(|(v, r)| 2.0 * inv_n * (v - r)).collect();
            zero_grads(critic);
            critic.backward_batch(sb, &vcache, &dv);
            clip_grad_norm(critic, self.tc.max_grad_norm);
            opt_critic.step(critic);
        }
    }

    /// Greedy (mean-action) evaluation episode; no learning, no exploration.
    pub fn evaluate_episode(&mut self, episode: u64) -> (EpisodeStats, Vec<StepReport>) {
        let k = self.env.cfg.num_mus;
        let m = self.env.cfg.num_uavs;
        let t_len = self.env.cfg.slots_per_period;
        self.env.reset(episode);
        let mut reports = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let slot = t as u64;
            let mut mu_actions = Vec::with_capacity(k);
            for ku in 0..k {
                let obs = self.env.observe_mu(ku, true);
                let raw = if self.variant == Variant::Random {
                    let mut rng = stream(self.seed, StreamTag::Policy, episode, slot, ku as u64);
                    (0..mu_raw_dim(m)).map(|_| rng.gen()).collect()
                } else {
                    self.actor_mu.mean_action(&obs)
                };
                mu_actions.push(remap_mu_action(&raw, m));
            }
            let mut uav_raws = Vec::with_capacity(m);
            for mu in 0..m {
                let obs = self.env.observe_uav(mu, &mu_actions, true);
                let raw = if self.variant == Variant::Random {
                    let mut rng =
                        stream(self.seed, StreamTag::Policy, episode, slot, (k + mu) as u64);
                    (0..uav_raw_dim(k)).map(|_| rng.gen()).collect()
                } else {
                    self.actor_uav.mean_action(&obs)
                };
                uav_raws.push(raw);
            }
            let uav_actions = remap_uav_actions(&uav_raws, &mu_actions, &self.env.cfg);
            reports.push(self.env.step(&mu_actions, &uav_actions));
        }
        (EpisodeStats::from_reports(episode, &reports), reports)
    }
}
