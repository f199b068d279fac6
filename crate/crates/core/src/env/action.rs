//! Raw-action remapping onto the feasible decision set.
//!
//! Actor outputs live in the unit cube (Beta support; Gaussian baselines are
//! squashed first). Remapping turns them into constraint-satisfying
//! decisions: one-hot association via argmax, rounding for the BS relay
//! flag, masking for the offload proportion, and normalization for the
//! frequency and (globally, across UAVs) the bandwidth splits.

use serde::{Deserialize, Serialize};

use super::config::EnvConfig;

/// A remapped MU decision. `assoc == 0` means local execution; `assoc == m`
/// (1-based) selects UAV `m - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuAction {
    pub assoc: usize,
    pub relay_to_bs: bool,
    pub rho: f64,
}

impl MuAction {
    pub fn local() -> Self {
        Self { assoc: 0, relay_to_bs: false, rho: 0.0 }
    }

    /// Serving UAV index (0-based), if any.
    pub fn serving_uav(&self) -> Option<usize> {
        if self.assoc == 0 {
            None
        } else {
            Some(self.assoc - 1)
        }
    }

    /// True when the offloaded share is executed on the serving UAV itself.
    pub fn uav_computes(&self) -> bool {
        self.assoc != 0 && !self.relay_to_bs
    }
}

/// A remapped UAV decision: per-MU bandwidth and frequency allocations plus
/// a horizontal acceleration command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavAction {
    /// Bandwidth per MU, Hz; nonzero only for this UAV's associates.
    pub bandwidth: Vec<f64>,
    /// Estimated CPU frequency per MU, Hz; nonzero only for UAV-compute MUs.
    pub freq: Vec<f64>,
    /// Commanded acceleration (x, y), m/s^2, with norm <= a_max.
    pub accel: (f64, f64),
}

/// Raw MU action length: M + 1 association scores, one BS-relay score, one
/// offload proportion.
pub fn mu_raw_dim(num_uavs: usize) -> usize {
    num_uavs + 3
}

/// Raw UAV action length: K bandwidth shares, K frequency shares, two
/// acceleration components.
pub fn uav_raw_dim(num_mus: usize) -> usize {
    2 * num_mus + 2
}

/// Remap one raw MU vector in `[0,1]^{M+3}` onto the feasible set.
/// Ties in the association argmax break toward the lowest index.
pub fn remap_mu_action(raw: &[f64], num_uavs: usize) -> MuAction {
    assert_eq!(raw.len(), mu_raw_dim(num_uavs));
    let mut assoc = 0usize;
    let mut best = raw[0];
    for (idx, &score) in raw.iter().enumerate().take(num_uavs + 1).skip(1) {
        if score > best {
            best = score;
            assoc = idx;
        }
    }
    if assoc == 0 {
        return MuAction::local();
    }
    MuAction {
        assoc,
        relay_to_bs: raw[num_uavs + 1] >= 0.5,
        rho: raw[num_uavs + 2].clamp(0.0, 1.0),
    }
}

/// Remap every UAV's raw vector at once. Association masks come from the
/// already-remapped MU actions; the bandwidth split is resolved globally so
/// the shared budget is never exceeded.
pub fn remap_uav_actions(
    raws: &[Vec<f64>],
    mu_actions: &[MuAction],
    cfg: &EnvConfig,
) -> Vec<UavAction> {
    let k = cfg.num_mus;
    let m = cfg.num_uavs;
    assert_eq!(raws.len(), m);
    assert_eq!(mu_actions.len(), k);

    let mut actions: Vec<UavAction> = Vec::with_capacity(m);
    let mut total_requested = 0.0;
    for (uav, raw) in raws.iter().enumerate() {
        assert_eq!(raw.len(), uav_raw_dim(k));
        let mut bandwidth = vec![0.0; k];
        let mut freq_share = vec![0.0; k];
        let mut freq_sum = 0.0;
        for (ku, mu) in mu_actions.iter().enumerate() {
            if mu.serving_uav() == Some(uav) {
                bandwidth[ku] = raw[ku].clamp(0.0, 1.0) * cfg.channel.total_bandwidth;
                total_requested += bandwidth[ku];
                if mu.uav_computes() {
                    freq_share[ku] = raw[k + ku].clamp(0.0, 1.0);
                    freq_sum += freq_share[ku];
                }
            }
        }
        // Frequencies scale so the total allocation is min(sum, 1) * f_max.
        let freq = if freq_sum > 0.0 {
            let scale = cfg.f_max_edge * freq_sum.min(1.0) / freq_sum;
            freq_share.iter().map(|s| s * scale).collect()
        } else {
            freq_share
        };
        let ax = (2.0 * raw[2 * k].clamp(0.0, 1.0) - 1.0) * cfg.a_max;
        let ay = (2.0 * raw[2 * k + 1].clamp(0.0, 1.0) - 1.0) * cfg.a_max;
        let norm = (ax * ax + ay * ay).sqrt();
        let accel = if norm > cfg.a_max {
            let s = cfg.a_max / norm;
            (ax * s, ay * s)
        } else {
            (ax, ay)
        };
        actions.push(UavAction { bandwidth, freq, accel });
    }

    // Global bandwidth normalization against the shared budget.
    if total_requested > cfg.channel.total_bandwidth {
        let scale = cfg.channel.total_bandwidth / total_requested;
        for action in &mut actions {
            for b in &mut action.bandwidth {
                *b *= scale;
            }
        }
    }
    actions
}
