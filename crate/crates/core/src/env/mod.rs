//! The multi-agent decision process: observation construction, action
//! remapping, the world-step transition, reward shaping, and fairness
//! metrics.
//!
//! One environment instance is single-threaded per step; independent
//! replicas (each with its own seed-derived streams) may run concurrently.

mod action;
mod config;

pub use action::{mu_raw_dim, remap_mu_action, remap_uav_actions, uav_raw_dim, MuAction, UavAction};
pub use config::{ConfigError, EnvConfig};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dt::{freq_deviation_for, sync, SyncInput, TwinStore};
use crate::physics::{
    air_ground_gain, relay_gain, relay_rate, step_mobility, uplink_rate, MuKinematics, Vec3,
};
use crate::rng::{stream, StreamTag};
use crate::tasking::{
    edge_pipeline, generate_task, local_compute, propulsion_energy, required_local_frequency,
    weighted_objective, EdgeRoute, TaskSpec,
};

/// Per-slot world snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub mus: Vec<MuKinematics>,
    /// Per-MU mean heading, drawn uniformly at reset.
    pub mu_mean_headings: Vec<f64>,
    pub tasks: Vec<TaskSpec>,
    pub uav_positions: Vec<Vec3>,
    pub uav_velocities: Vec<(f64, f64)>,
    pub twins: TwinStore,
    /// Previous-slot edge computation load per UAV, cycles.
    pub prev_uav_load: Vec<f64>,
    pub slot: u64,
    pub episode: u64,
}

/// Everything the environment reports about one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub mu_rewards: Vec<f64>,
    pub uav_rewards: Vec<f64>,
    pub mu_energies: Vec<f64>,
    pub uav_energies: Vec<f64>,
    /// Per-MU latency overshoot, relu(T_loc - dt) + relu(T_edge - dt).
    pub latency_violations: Vec<f64>,
    /// Per-MU latency penalty P^t.
    pub latency_penalties: Vec<f64>,
    pub boundary_penalties: Vec<f64>,
    pub collision_penalties: Vec<f64>,
    /// Signed distance-shaping terms, one per UAV.
    pub distance_penalties: Vec<f64>,
    pub jain_index: f64,
    pub objective: f64,
    pub associations: Vec<usize>,
    pub mu_positions: Vec<(f64, f64)>,
    pub uav_positions: Vec<(f64, f64)>,
}

impl StepReport {
    pub fn total_penalty(&self) -> f64 {
        self.latency_penalties.iter().sum::<f64>()
            + self.boundary_penalties.iter().sum::<f64>()
            + self.collision_penalties.iter().sum::<f64>()
    }
}

/// Jain's fairness index of a non-negative allocation, in [1/K, 1].
pub fn jain_index(energies: &[f64]) -> f64 {
    let sum: f64 = energies.iter().sum();
    let sum_sq: f64 = energies.iter().map(|e| e * e).sum();
    if sum_sq == 0.0 {
        return 1.0;
    }
    sum * sum / (energies.len() as f64 * sum_sq)
}

/// Signed UAV-to-associates distance shaping term:
/// `(dist(q, centroid) - d_th) / W`, zero without associates.
pub fn penalty_distance(
    uav_position: &Vec3,
    associate_positions: &[Vec3],
    d_th: f64,
    region_width: f64,
) -> f64 {
    if associate_positions.is_empty() {
        return 0.0;
    }
    let n = associate_positions.len() as f64;
    let cx = associate_positions.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = associate_positions.iter().map(|p| p.y).sum::<f64>() / n;
    let dx = uav_position.x - cx;
    let dy = uav_position.y - cy;
    ((dx * dx + dy * dy).sqrt() - d_th) / region_width
}

/// Safety-distance penalty of UAV `m` against every other UAV: a linear ramp
/// from 0 at `d_min` to `mu_c` per co-located neighbor.
pub fn penalty_collision(positions: &[Vec3], m: usize, d_min: f64, mu_c: f64) -> f64 {
    let mut total = 0.0;
    for (j, q) in positions.iter().enumerate() {
        if j == m {
            continue;
        }
        let d = positions[m].distance(q);
        total += ((d_min - d) / d_min).max(0.0);
    }
    mu_c * total
}

/// The simulated MEC world.
#[derive(Debug, Clone)]
pub struct Env {
    pub cfg: EnvConfig,
    pub state: EnvState,
    seed: u64,
}

impl Env {
    pub fn new(cfg: EnvConfig, seed: u64) -> Self {
        cfg.validate().expect("invalid environment config");
        let state = Self::initial_state(&cfg, seed, 0);
        Self { cfg, state, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Restart an episode: MUs uniform over the region, UAVs uniform at
    /// altitude with zero velocity, fresh tasks, twins synced.
    pub fn reset(&mut self, episode: u64) {
        self.state = Self::initial_state(&self.cfg, self.seed, episode);
    }

    fn initial_state(cfg: &EnvConfig, seed: u64, episode: u64) -> EnvState {
        let w = cfg.region_width;
        let k = cfg.num_mus;
        let m = cfg.num_uavs;
        let mut mus = Vec::with_capacity(k);
        let mut headings = Vec::with_capacity(k);
        let mut tasks = Vec::with_capacity(k);
        for ku in 0..k {
            let mut rng = stream(seed, StreamTag::Reset, episode, 0, ku as u64);
            let position = Vec3::new(rng.gen::<f64>() * w, rng.gen::<f64>() * w, 0.0);
            let heading = rng.gen::<f64>() * std::f64::consts::TAU;
            mus.push(MuKinematics { position, speed: cfg.mobility.mean_speed, heading });
            headings.push(heading);
            let mut task_rng = stream(seed, StreamTag::TaskGen, episode, 0, ku as u64);
            tasks.push(generate_task(&cfg.tasks, cfg.slot_duration, &mut task_rng));
        }
        let mut uav_positions = Vec::with_capacity(m);
        for mu in 0..m {
            let mut rng = stream(seed, StreamTag::Reset, episode, 0, (k + mu) as u64);
            uav_positions.push(Vec3::new(
                rng.gen::<f64>() * w,
                rng.gen::<f64>() * w,
                cfg.uav_altitude,
            ));
        }
        let mu_positions: Vec<Vec3> = mus.iter().map(|s| s.position).collect();
        let twins = sync(
            &SyncInput {
                mu_positions: &mu_positions,
                tasks: &tasks,
                est_local_freqs: &vec![0.0; k],
                uav_positions: &uav_positions,
                associations: &vec![vec![false; k]; m],
                est_alloc_freqs: &vec![vec![0.0; k]; m],
            },
            &cfg.deviation,
            w,
            seed,
            episode,
            0,
        );
        EnvState {
            mus,
            mu_mean_headings: headings,
            tasks,
            uav_positions,
            uav_velocities: vec![(0.0, 0.0); m],
            twins,
            prev_uav_load: vec![0.0; m],
            slot: 0,
            episode,
        }
    }

    pub fn mu_obs_dim(&self) -> usize {
        2 + 2 * self.cfg.num_uavs + 2 + self.cfg.num_uavs
    }

    pub fn uav_obs_dim(&self) -> usize {
        5 * self.cfg.num_mus + 2 + 2 * (self.cfg.num_uavs - 1)
    }

    /// MU observation: own position, every UAV position, the current task,
    /// and the previous-slot per-UAV computation loads; all normalized to
    /// [0, 1]. With `noisy`, cross-entity positions come from the twins.
    pub fn observe_mu(&self, k: usize, noisy: bool) -> Vec<f64> {
        let cfg = &self.cfg;
        let w = cfg.region_width;
        let mut obs = Vec::with_capacity(self.mu_obs_dim());
        let own = if noisy && cfg.deviation.enabled && cfg.deviation.perturb_own_position {
            self.state.twins.mus[k].position
        } else {
            self.state.mus[k].position
        };
        obs.push(own.x / w);
        obs.push(own.y / w);
        for m in 0..cfg.num_uavs {
            let q = if noisy { self.state.twins.uavs[m].position } else { self.state.uav_positions[m] };
            obs.push(q.x / w);
            obs.push(q.y / w);
        }
        let task = self.state.tasks[k];
        obs.push(task.bits / cfg.tasks.bits_max);
        obs.push(task.cycles_per_bit / cfg.tasks.cycles_per_bit_max);
        let load_cap = cfg.f_max_edge * cfg.slot_duration;
        for m in 0..cfg.num_uavs {
            obs.push(self.state.prev_uav_load[m] / load_cap);
        }
        for v in &mut obs {
            *v = v.clamp(0.0, 1.0);
        }
        obs
    }

    /// UAV observation, built after the MU decisions are fixed: per MU the
    /// offload proportion masked to this UAV's associates, the task, and the
    /// MU position; then own position and the other UAV positions.
    pub fn observe_uav(&self, m: usize, mu_actions: &[MuAction], noisy: bool) -> Vec<f64> {
        let cfg = &self.cfg;
        let w = cfg.region_width;
        let mut obs = Vec::with_capacity(self.uav_obs_dim());
        for k in 0..cfg.num_mus {
            let rho = if mu_actions[k].serving_uav() == Some(m) { mu_actions[k].rho } else { 0.0 };
            obs.push(rho);
            let task = self.state.tasks[k];
            obs.push(task.bits / cfg.tasks.bits_max);
            obs.push(task.cycles_per_bit / cfg.tasks.cycles_per_bit_max);
            let p = if noisy { self.state.twins.mus[k].position } else { self.state.mus[k].position };
            obs.push(p.x / w);
            obs.push(p.y / w);
        }
        let own = if noisy && cfg.deviation.enabled && cfg.deviation.perturb_own_position {
            self.state.twins.uavs[m].position
        } else {
            self.state.uav_positions[m]
        };
        obs.push(own.x / w);
        obs.push(own.y / w);
        for j in 0..cfg.num_uavs {
            if j == m {
                continue;
            }
            let q = if noisy { self.state.twins.uavs[j].position } else { self.state.uav_positions[j] };
            obs.push(q.x / w);
            obs.push(q.y / w);
        }
        for v in &mut obs {
            *v = v.clamp(0.0, 1.0);
        }
        obs
    }

    /// Advance one slot with remapped actions. Rates and computation use the
    /// slot-start geometry; afterwards UAVs and MUs move, tasks regenerate,
    /// and the twins resynchronize.
    pub fn step(&mut self, mu_actions: &[MuAction], uav_actions: &[UavAction]) -> StepReport {
        let cfg = self.cfg.clone();
        let k = cfg.num_mus;
        let m = cfg.num_uavs;
        assert_eq!(mu_actions.len(), k);
        assert_eq!(uav_actions.len(), m);
        let dt = cfg.slot_duration;
        let seed = self.seed;
        let episode = self.state.episode;
        let slot = self.state.slot;

        // Relay rates per UAV at slot-start geometry.
        let relay_rates: Vec<f64> = (0..m)
            .map(|mu| {
                let gain = relay_gain(
                    &self.state.uav_positions[mu],
                    &cfg.bs_position,
                    cfg.channel.ref_gain,
                )
                .expect("UAV cannot be co-located with the BS");
                relay_rate(cfg.channel.relay_bandwidth, cfg.uav_tx_power, gain, cfg.channel.noise_density)
            })
            .collect();

        let mut mu_energies = vec![0.0; k];
        let mut latency_violations = vec![0.0; k];
        let mut latency_penalties = vec![0.0; k];
        let mut est_local_freqs = vec![0.0; k];
        let mut uav_compute_energy = vec![0.0; m];
        let mut uav_load = vec![0.0; m];

        for (ku, mu) in mu_actions.iter().enumerate() {
            let task = self.state.tasks[ku];
            let rho = if mu.assoc == 0 { 0.0 } else { mu.rho };

            // Local share under DVFS with a twin frequency deviation.
            let est_freq = required_local_frequency(&task, rho, dt, cfg.f_max_local);
            est_local_freqs[ku] = est_freq;
            let (local_time, local_energy) = if est_freq > 0.0 {
                let dev = freq_deviation_for(est_freq, &cfg.deviation, seed, episode, slot, ku as u64);
                local_compute(&task, rho, est_freq, dev, cfg.kappa)
            } else {
                (0.0, 0.0)
            };

            // Offloaded share.
            let mut edge_time = 0.0;
            let mut offload_energy = 0.0;
            if let Some(serving) = mu.serving_uav() {
                let gain = air_ground_gain(
                    &self.state.mus[ku].position,
                    &self.state.uav_positions[serving],
                    &cfg.channel,
                )
                .expect("MU cannot be co-located with a UAV at altitude");
                let rate = uplink_rate(
                    uav_actions[serving].bandwidth[ku],
                    cfg.mu_tx_power,
                    gain,
                    cfg.channel.noise_density,
                );
                let route = if mu.relay_to_bs {
                    EdgeRoute::BsRelay { relay_rate: relay_rates[serving] }
                } else {
                    let est = uav_actions[serving].freq[ku];
                    let dev = freq_deviation_for(
                        est,
                        &cfg.deviation,
                        seed,
                        episode,
                        slot,
                        (k + m + serving * k + ku) as u64,
                    );
                    EdgeRoute::UavCompute { est_freq: est, freq_dev: dev }
                };
                let out = edge_pipeline(&task, rho, rate, route, cfg.mu_tx_power, cfg.kappa, dt);
                edge_time = out.edge_time;
                offload_energy = out.mu_offload_energy;
                uav_compute_energy[serving] += out.uav_compute_energy;
                if mu.uav_computes() {
                    uav_load[serving] += task.edge_cycles(rho);
                }
            }

            mu_energies[ku] = local_energy + offload_energy;
            let violation = (local_time - dt).max(0.0) + (edge_time - dt).max(0.0);
            latency_violations[ku] = violation;
            latency_penalties[ku] = cfg.penalty_latency / dt * violation;
        }

        // UAV kinematics: propulsion is charged on the slot velocity; the
        // position advances with it and the commanded acceleration, stopping
        // at the region boundary.
        let mut uav_energies = vec![0.0; m];
        let mut boundary_penalties = vec![0.0; m];
        let mut new_positions = Vec::with_capacity(m);
        let mut new_velocities = Vec::with_capacity(m);
        for mu in 0..m {
            let (vx, vy) = self.state.uav_velocities[mu];
            let speed = (vx * vx + vy * vy).sqrt();
            uav_energies[mu] = propulsion_energy(speed, &cfg.uav_power, dt) + uav_compute_energy[mu];

            let (ax, ay) = uav_actions[mu].accel;
            let q = self.state.uav_positions[mu];
            let cmd_x = q.x + vx * dt + 0.5 * ax * dt * dt;
            let cmd_y = q.y + vy * dt + 0.5 * ay * dt * dt;
            let clipped_x = cmd_x.clamp(0.0, cfg.region_width);
            let clipped_y = cmd_y.clamp(0.0, cfg.region_width);
            let overshoot =
                ((cmd_x - clipped_x).powi(2) + (cmd_y - clipped_y).powi(2)).sqrt();
            boundary_penalties[mu] = cfg.penalty_boundary * overshoot;

            let mut nvx = vx + ax * dt;
            let mut nvy = vy + ay * dt;
            let vnorm = (nvx * nvx + nvy * nvy).sqrt();
            if vnorm > cfg.v_max {
                let s = cfg.v_max / vnorm;
                nvx *= s;
                nvy *= s;
            }
            // A UAV stopped by the boundary loses the normal velocity component.
            if cmd_x != clipped_x {
                nvx = 0.0;
            }
            if cmd_y != clipped_y {
                nvy = 0.0;
            }
            new_positions.push(Vec3::new(clipped_x, clipped_y, cfg.uav_altitude));
            new_velocities.push((nvx, nvy));
        }

        let mut collision_penalties = vec![0.0; m];
        let mut distance_penalties = vec![0.0; m];
        for mu in 0..m {
            collision_penalties[mu] =
                penalty_collision(&new_positions, mu, cfg.d_min, cfg.penalty_collision);
            let associates: Vec<Vec3> = mu_actions
                .iter()
                .enumerate()
                .filter(|(_, a)| a.serving_uav() == Some(mu))
                .map(|(ku, _)| self.state.mus[ku].position)
                .collect();
            distance_penalties[mu] =
                penalty_distance(&new_positions[mu], &associates, cfg.d_th, cfg.region_width);
        }

        // Rewards: every cost negated for both agent types.
        let mut mu_rewards = vec![0.0; k];
        for (ku, mu) in mu_actions.iter().enumerate() {
            let mut r = -mu_energies[ku];
            if let Some(serving) = mu.serving_uav() {
                r -= cfg.weight_factor * uav_energies[serving] + latency_penalties[ku];
            }
            mu_rewards[ku] = r;
        }
        let mut uav_rewards = vec![0.0; m];
        for mu in 0..m {
            let mut r = -cfg.weight_factor * uav_energies[mu];
            for (ku, a) in mu_actions.iter().enumerate() {
                if a.serving_uav() == Some(mu) {
                    r -= mu_energies[ku] + latency_penalties[ku];
                }
            }
            r -= boundary_penalties[mu] + collision_penalties[mu] + distance_penalties[mu];
            uav_rewards[mu] = r;
        }

        let objective = weighted_objective(&uav_energies, &mu_energies, cfg.weight_factor);
        let jain = jain_index(&mu_energies);

        // Advance the world: MUs move, tasks regenerate, twins resync.
        let next_slot = slot + 1;
        let mut new_tasks = Vec::with_capacity(k);
        for ku in 0..k {
            let mut params = cfg.mobility;
            params.mean_heading = self.state.mu_mean_headings[ku];
            let mut rng = stream(seed, StreamTag::Mobility, episode, next_slot, ku as u64);
            self.state.mus[ku] =
                step_mobility(&self.state.mus[ku], &params, dt, cfg.region_width, &mut rng);
            let mut task_rng = stream(seed, StreamTag::TaskGen, episode, next_slot, ku as u64);
            new_tasks.push(generate_task(&cfg.tasks, dt, &mut task_rng));
        }
        self.state.tasks = new_tasks;
        self.state.uav_positions = new_positions;
        self.state.uav_velocities = new_velocities;
        self.state.prev_uav_load = uav_load;
        self.state.slot = next_slot;

        let associations: Vec<usize> = mu_actions.iter().map(|a| a.assoc).collect();
        let mut est_alloc_freqs = vec![vec![0.0; k]; m];
        let mut assoc_rows = vec![vec![false; k]; m];
        for (ku, a) in mu_actions.iter().enumerate() {
            if let Some(serving) = a.serving_uav() {
                assoc_rows[serving][ku] = true;
                est_alloc_freqs[serving][ku] = uav_actions[serving].freq[ku];
            }
        }
        let mu_positions: Vec<Vec3> = self.state.mus.iter().map(|s| s.position).collect();
        self.state.twins = sync(
            &SyncInput {
                mu_positions: &mu_positions,
                tasks: &self.state.tasks,
                est_local_freqs: &est_local_freqs,
                uav_positions: &self.state.uav_positions,
                associations: &assoc_rows,
                est_alloc_freqs: &est_alloc_freqs,
            },
            &cfg.deviation,
            cfg.region_width,
            seed,
            episode,
            next_slot,
        );

        StepReport {
            mu_rewards,
            uav_rewards,
            mu_energies,
            uav_energies,
            latency_violations,
            latency_penalties,
            boundary_penalties,
            collision_penalties,
            distance_penalties,
            jain_index: jain,
            objective,
            associations,
            mu_positions: self.state.mus.iter().map(|s| (s.position.x, s.position.y)).collect(),
            uav_positions: self.state.uav_positions.iter().map(|q| (q.x, q.y)).collect(),
        }
    }
}
