//! Runtime self-checks. These re-verify the core invariants on the machine
//! at hand (determinism, bounds, conservation) so a deployment can sanity
//! check itself without pulling in the full test suite.

use crate::env::{
    mu_raw_dim, remap_mu_action, remap_uav_actions, uav_raw_dim, Env, EnvConfig, MuAction,
    StepReport, UavAction,
};
use crate::mappo::{checkpoint, AttnDims, TrainConfig, Trainer, Variant};
use crate::rng::{stream, StreamTag};
use rand::Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, result: Result<(), String>) -> CheckResult {
    match result {
        Ok(()) => CheckResult { name, passed: true, detail: "ok".to_string() },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn desk_env(seed: u64) -> Env {
    Env::new(EnvConfig::desk_profile(), seed)
}

fn random_actions(
    env: &Env,
    seed: u64,
    episode: u64,
    slot: u64,
) -> (Vec<MuAction>, Vec<UavAction>) {
    let k = env.cfg.num_mus;
    let m = env.cfg.num_uavs;
    let mu_actions: Vec<MuAction> = (0..k)
        .map(|i| {
            let mut rng = stream(seed, StreamTag::Policy, episode, slot, i as u64);
            let raw: Vec<f64> = (0..mu_raw_dim(m)).map(|_| rng.gen::<f64>()).collect();
            remap_mu_action(&raw, m)
        })
        .collect();
    let uav_raw: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut rng = stream(seed, StreamTag::Policy, episode, slot, (k + j) as u64);
            (0..uav_raw_dim(k)).map(|_| rng.gen::<f64>()).collect()
        })
        .collect();
    let uav_actions = remap_uav_actions(&uav_raw, &mu_actions, &env.cfg);
    (mu_actions, uav_actions)
}

fn rollout(seed: u64, slots: usize) -> Vec<StepReport> {
    let mut env = desk_env(seed);
    env.reset(0);
    let mut reports = Vec::new();
    for t in 0..slots {
        let (mu_actions, uav_actions) = random_actions(&env, seed, 0, t as u64);
        reports.push(env.step(&mu_actions, &uav_actions));
    }
    reports
}

fn check_determinism() -> Result<(), String> {
    let a = rollout(11, 12);
    let b = rollout(11, 12);
    if a != b {
        return Err("identical seeds diverged".to_string());
    }
    let c = rollout(12, 1);
    if a[0].objective == c[0].objective {
        return Err("different seeds produced identical trajectories".to_string());
    }
    Ok(())
}

fn check_physical_bounds() -> Result<(), String> {
    let cfg = EnvConfig::desk_profile();
    for report in rollout(7, 20) {
        for (i, &(x, y)) in report.uav_positions.iter().enumerate() {
            for c in [x, y] {
                if !(0.0..=cfg.region_width).contains(&c) {
                    return Err(format!("uav {i} left the region: ({x}, {y})"));
                }
            }
        }
        if !(0.0..=1.0 + 1e-12).contains(&report.jain_index) {
            return Err(format!("jain index {} out of range", report.jain_index));
        }
        for &e in report.mu_energies.iter().chain(&report.uav_energies) {
            if !e.is_finite() || e < 0.0 {
                return Err(format!("negative or non-finite energy {e}"));
            }
        }
        if !report.objective.is_finite() {
            return Err("non-finite objective".to_string());
        }
    }
    Ok(())
}

fn check_observation_ranges() -> Result<(), String> {
    let seed = 3;
    let mut env = desk_env(seed);
    env.reset(0);
    for t in 0..10 {
        let (mu_actions, uav_actions) = random_actions(&env, seed, 0, t as u64);
        for i in 0..env.cfg.num_mus {
            for (d, &v) in env.observe_mu(i, true).iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("mu obs[{d}] = {v} out of [0,1]"));
                }
            }
        }
        for j in 0..env.cfg.num_uavs {
            for (d, &v) in env.observe_uav(j, &mu_actions, true).iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("uav obs[{d}] = {v} out of [0,1]"));
                }
            }
        }
        env.step(&mu_actions, &uav_actions);
    }
    Ok(())
}

fn tiny_trainer(seed: u64) -> Trainer {
    let env = EnvConfig { slots_per_period: 4, ..EnvConfig::desk_profile() };
    let tc = TrainConfig {
        episodes: 2,
        hidden: 10,
        attn: AttnDims { feat_hidden: 6, feat_dim: 4, heads: 2, d_key: 2, d_val: 2, out_dim: 4 },
        ..TrainConfig::default()
    };
    Trainer::new(env, tc, Variant::AbMappo, seed)
}

fn check_training_step() -> Result<(), String> {
    let mut t = tiny_trainer(5);
    let s0 = t.run_episode();
    let s1 = t.run_episode();
    if !s0.mean_mu_reward.is_finite() || !s1.mean_mu_reward.is_finite() {
        return Err("non-finite episode reward".to_string());
    }
    if s1.episode != s0.episode + 1 {
        return Err("episode counter did not advance".to_string());
    }
    Ok(())
}

fn check_checkpoint_round_trip() -> Result<(), String> {
    let path = std::env::temp_dir().join(format!("aeromec-validate-{}.txt", std::process::id()));
    let mut a = tiny_trainer(9);
    a.run_episode();
    checkpoint::save(&mut a, &path).map_err(|e| e.to_string())?;
    let mut b = tiny_trainer(9);
    let loaded = checkpoint::load(&mut b, &path).map_err(|e| e.to_string());
    let _ = std::fs::remove_file(&path);
    loaded?;
    let sa = a.run_episode();
    let sb = b.run_episode();
    if sa.mean_mu_reward.to_bits() != sb.mean_mu_reward.to_bits() {
        return Err("restored trainer diverged from original".to_string());
    }
    Ok(())
}

/// Run the full invariant suite. `passed` on every entry means the build
/// behaves identically to the reference semantics on this machine.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check("determinism", check_determinism()),
        check("physical-bounds", check_physical_bounds()),
        check("observation-ranges", check_observation_ranges()),
        check("training-step", check_training_step()),
        check("checkpoint-round-trip", check_checkpoint_round_trip()),
    ]
}
