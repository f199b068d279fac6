//! Centralized critics. The attention critic embeds every agent's
//! observation with a per-type feature net, mixes the embeddings with
//! multi-head attention, and scores each own-type agent from its aggregated
//! embedding concatenated with its own observation. The flat baseline
//! replaces the attention stack with the raw global state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::neuro::attention::{AttnCache, MultiHeadAttention};
use crate::neuro::matrix::Matrix;
use crate::neuro::mlp::{Mlp, MlpCache};
use crate::neuro::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentType {
    Mu,
    Uav,
}

/// Noise-free observations of every agent for a whole episode, stacked
/// t-major: row `t * n + i` belongs to agent `i` at step `t`.
#[derive(Debug, Clone)]
pub struct StateBatch {
    pub t_len: usize,
    pub num_mus: usize,
    pub num_uavs: usize,
    pub mu_obs: Matrix,
    pub uav_obs: Matrix,
}

impl StateBatch {
    /// Global state per step: every observation concatenated.
    pub fn global(&self) -> Matrix {
        let g_dim = self.num_mus * self.mu_obs.cols + self.num_uavs * self.uav_obs.cols;
        let mut g = Matrix::zeros(self.t_len, g_dim);
        for t in 0..self.t_len {
            let row = g.row_mut(t);
            let mut at = 0;
            for k in 0..self.num_mus {
                let o = self.mu_obs.row(t * self.num_mus + k);
                row[at..at + o.len()].copy_from_slice(o);
                at += o.len();
            }
            for m in 0..self.num_uavs {
                let o = self.uav_obs.row(t * self.num_uavs + m);
                row[at..at + o.len()].copy_from_slice(o);
                at += o.len();
            }
        }
        g
    }

    fn own(&self, ty: AgentType) -> (&Matrix, usize) {
        match ty {
            AgentType::Mu => (&self.mu_obs, self.num_mus),
            AgentType::Uav => (&self.uav_obs, self.num_uavs),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CriticArch {
    Attention { feat_mu: Mlp, feat_uav: Mlp, attn: MultiHeadAttention, head: Mlp },
    Flat { head: Mlp },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticNet {
    pub own: AgentType,
    pub arch: CriticArch,
}

pub struct CriticCache {
    head: MlpCache,
    feat_mu: Option<MlpCache>,
    feat_uav: Option<MlpCache>,
    attn: Vec<AttnCache>,
    attn_dim: usize,
}

/// Attention stack dimensions (feature width, heads, key/value width and the
/// aggregated output width).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttnDims {
    pub feat_hidden: usize,
    pub feat_dim: usize,
    pub heads: usize,
    pub d_key: usize,
    pub d_val: usize,
    pub out_dim: usize,
}

impl Default for AttnDims {
    fn default() -> Self {
        Self { feat_hidden: 64, feat_dim: 32, heads: 4, d_key: 8, d_val: 8, out_dim: 32 }
    }
}

impl CriticNet {
    pub fn new_attention(
        own: AgentType,
        mu_obs_dim: usize,
        uav_obs_dim: usize,
        dims: AttnDims,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let own_dim = match own {
            AgentType::Mu => mu_obs_dim,
            AgentType::Uav => uav_obs_dim,
        };
        Self {
            own,
            arch: CriticArch::Attention {
                feat_mu: Mlp::new(&[mu_obs_dim, dims.feat_hidden, dims.feat_dim], 1.0, rng),
                feat_uav: Mlp::new(&[uav_obs_dim, dims.feat_hidden, dims.feat_dim], 1.0, rng),
                attn: MultiHeadAttention::new(
                    dims.feat_dim,
                    dims.heads,
                    dims.d_key,
                    dims.d_val,
                    dims.out_dim,
                    rng,
                ),
                head: Mlp::new(&[dims.out_dim + own_dim, hidden, 1], 1.0, rng),
            },
        }
    }

    pub fn new_flat(
        own: AgentType,
        mu_obs_dim: usize,
        uav_obs_dim: usize,
        num_mus: usize,
        num_uavs: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let own_dim = match own {
            AgentType::Mu => mu_obs_dim,
            AgentType::Uav => uav_obs_dim,
        };
        let global = num_mus * mu_obs_dim + num_uavs * uav_obs_dim;
        Self {
            own,
            arch: CriticArch::Flat { head: Mlp::new(&[global + own_dim, hidden, 1], 1.0, rng) },
        }
    }

    /// Values for every own-type agent, t-major (`t * n + i`).
    pub fn forward_batch(&self, sb: &StateBatch) -> (Vec<f64>, CriticCache) {
        let (own_obs, n_own) = sb.own(self.own);
        match &self.arch {
            CriticArch::Flat { head } => {
                let global = sb.global();
                let g_dim = global.cols;
                let mut head_in = Matrix::zeros(sb.t_len * n_own, g_dim + own_obs.cols);
                for t in 0..sb.t_len {
                    for i in 0..n_own {
                        let row = head_in.row_mut(t * n_own + i);
                        row[..g_dim].copy_from_slice(global.row(t));
                        row[g_dim..].copy_from_slice(own_obs.row(t * n_own + i));
                    }
                }
                let (v, cache) = head.forward(&head_in);
                (
                    v.data,
                    CriticCache {
                        head: cache,

                        feat_mu: None,
                        feat_uav: None,
                        attn: Vec::new(),
                        attn_dim: 0,
                    },
                )
            }
            CriticArch::Attention { feat_mu, feat_uav, attn, head } => {
                let (f_mu, c_mu) = feat_mu.forward(&sb.mu_obs);
                let (f_uav, c_uav) = feat_uav.forward(&sb.uav_obs);
                let feat_dim = f_mu.cols;
                let n_all = sb.num_mus + sb.num_uavs;
                let a_dim = attn.out_dim();
                let mut head_in = Matrix::zeros(sb.t_len * n_own, a_dim + own_obs.cols);
                let mut attn_caches = Vec::with_capacity(sb.t_len);
                for t in 0..sb.t_len {
                    let mut feats = Matrix::zeros(n_all, feat_dim);
                    for k in 0..sb.num_mus {
                        feats.row_mut(k).copy_from_slice(f_mu.row(t * sb.num_mus + k));
                    }
                    for m in 0..sb.num_uavs {
                        feats
                            .row_mut(sb.num_mus + m)
                            .copy_from_slice(f_uav.row(t * sb.num_uavs + m));
                    }
                    let (agg, cache) = attn.forward(&feats);
                    let own_offset = match self.own {
                        AgentType::Mu => 0,
                        AgentType::Uav => sb.num_mus,
                    };
                    for i in 0..n_own {
                        let row = head_in.row_mut(t * n_own + i);
                        row[..a_dim].copy_from_slice(agg.row(own_offset + i));
                        row[a_dim..].copy_from_slice(own_obs.row(t * n_own + i));
                    }
                    attn_caches.push(cache);
                }
                let (v, head_cache) = head.forward(&head_in);
                (
                    v.data,
                    CriticCache {
                        head: head_cache,

                        feat_mu: Some(c_mu),
                        feat_uav: Some(c_uav),
                        attn: attn_caches,
                        attn_dim: a_dim,
                    },
                )
            }
        }
    }

    /// Accumulate gradients of `sum_j dvalues[j] * v_j`.
    pub fn backward_batch(&mut self, sb: &StateBatch, cache: &CriticCache, dvalues: &[f64]) {
        let (_, n_own) = sb.own(self.own);
        let mut dv = Matrix::zeros(dvalues.len(), 1);
        dv.data.copy_from_slice(dvalues);
        match &mut self.arch {
            CriticArch::Flat { head } => {
                head.backward(&cache.head, &dv);
            }
            CriticArch::Attention { feat_mu, feat_uav, attn, head } => {
                let d_head_in = head.backward(&cache.head, &dv);
                let a_dim = cache.attn_dim;
                let feat_dim = attn.wq[0].w.cols;
                let n_all = sb.num_mus + sb.num_uavs;
                let own_offset = match self.own {
                    AgentType::Mu => 0,
                    AgentType::Uav => sb.num_mus,
                };
                let mut d_fmu = Matrix::zeros(sb.t_len * sb.num_mus, feat_dim);
                let mut d_fuav = Matrix::zeros(sb.t_len * sb.num_uavs, feat_dim);
                for t in 0..sb.t_len {
                    let mut d_agg = Matrix::zeros(n_all, a_dim);
                    for i in 0..n_own {
                        d_agg
                            .row_mut(own_offset + i)
                            .copy_from_slice(&d_head_in.row(t * n_own + i)[..a_dim]);
                    }
                    let d_feats = attn.backward(&cache.attn[t], &d_agg);
                    for k in 0..sb.num_mus {
                        for (acc, d) in d_fmu
                            .row_mut(t * sb.num_mus + k)
                            .iter_mut()
                            .zip(d_feats.row(k))
                        {
                            *acc += d;
                        }
                    }
                    for m in 0..sb.num_uavs {
                        for (acc, d) in d_fuav
                            .row_mut(t * sb.num_uavs + m)
                            .iter_mut()
                            .zip(d_feats.row(sb.num_mus + m))
                        {
                            *acc += d;
                        }
                    }
                }
                feat_mu.backward(cache.feat_mu.as_ref().unwrap(), &d_fmu);
                feat_uav.backward(cache.feat_uav.as_ref().unwrap(), &d_fuav);
            }
        }
    }
}

impl ParamSet for CriticNet {
    fn visit(&mut self, f: &mut dyn FnMut(&mut [f64], &mut [f64])) {
        match &mut self.arch {
            CriticArch::Flat { head } => head.visit(f),
            CriticArch::Attention { feat_mu, feat_uav, attn, head } => {
                feat_mu.visit(f);
                feat_uav.visit(f);
                attn.visit(f);
                head.visit(f);
            }
        }
    }
}
