//! The digital-twin layer: virtual replicas of MUs and UAVs plus the
//! estimation deviations (frequency and location) injected between physical
//! truth and the values agents observe.
//!
//! Twins are the source of agent observations; physical truth is the source
//! of rewards and transitions. The twin store has a single writer (the
//! environment step); observation builders read a consistent per-slot
//! snapshot.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::physics::Vec3;
use crate::rng::{stream, StreamTag};
use crate::tasking::TaskSpec;

/// Virtual replica of one MU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTwin {
    pub position: Vec3,
    pub task: TaskSpec,
    /// DVFS frequency estimate recorded for the current slot, Hz.
    pub est_local_freq: f64,
}

/// Virtual replica of one UAV's service status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavTwin {
    pub position: Vec3,
    /// Association row: true where this UAV serves the MU.
    pub association: Vec<bool>,
    /// Estimated frequency allocation per MU, Hz.
    pub est_alloc_freq: Vec<f64>,
}

/// Twin-estimation error model. Frequency deviations are multiplicative
/// uniform; location deviations are additive uniform as a fraction of the
/// region width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationModel {
    pub enabled: bool,
    /// Frequency deviation rate, in [0, 1).
    pub freq_rate: f64,
    /// Location deviation rate as a fraction of the region width, in [0, 1).
    pub loc_rate: f64,
    /// Whether an entity's own position entry is perturbed in its own
    /// observation (cross-entity entries always are).
    pub perturb_own_position: bool,
}

impl DeviationModel {
    pub fn disabled() -> Self {
        Self { enabled: false, freq_rate: 0.0, loc_rate: 0.0, perturb_own_position: false }
    }

    pub fn uniform(rate: f64) -> Self {
        Self { enabled: rate > 0.0, freq_rate: rate, loc_rate: rate, perturb_own_position: false }
    }

    fn effective_freq_rate(&self) -> f64 {
        if self.enabled {
            self.freq_rate
        } else {
            0.0
        }
    }

    fn effective_loc_rate(&self) -> f64 {
        if self.enabled {
            self.loc_rate
        } else {
            0.0
        }
    }
}

/// Consistent per-slot snapshot of every twin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinStore {
    pub mus: Vec<MuTwin>,
    pub uavs: Vec<UavTwin>,
}

/// Multiplicative frequency deviation: `f_est * Uniform[-rate, rate]`.
/// The actual frequency `f_est + dev` stays strictly positive whenever
/// `f_est > 0` and `rate < 1`.
pub fn draw_freq_deviation(est_freq: f64, rate: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(est_freq >= 0.0);
    debug_assert!((0.0..1.0).contains(&rate));
    if rate == 0.0 || est_freq == 0.0 {
        return 0.0;
    }
    est_freq * rng.gen_range(-rate..rate)
}

/// Additive location noise on the horizontal coordinates, clamped back into
/// the region box; the altitude is untouched.
pub fn noisy_position(p: &Vec3, rate: f64, region_width: f64, rng: &mut impl Rng) -> Vec3 {
    if rate == 0.0 {
        return *p;
    }
    let scale = rate * region_width;
    let x = p.x + rng.gen_range(-scale..scale);
    let y = p.y + rng.gen_range(-scale..scale);
    Vec3::new(x.clamp(0.0, region_width), y.clamp(0.0, region_width), p.z)
}

/// Physical-truth projections handed to the twin layer once per slot.
pub struct SyncInput<'a> {
    pub mu_positions: &'a [Vec3],
    pub tasks: &'a [TaskSpec],
    pub est_local_freqs: &'a [f64],
    pub uav_positions: &'a [Vec3],
    pub associations: &'a [Vec<bool>],
    pub est_alloc_freqs: &'a [Vec<f64>],
}

/// Rebuild the twin store from physical truth, applying location deviations.
/// Each entity draws from its own (seed, episode, slot, entity) stream, so
/// the draw an entity sees never depends on update order.
pub fn sync(
    input: &SyncInput,
    dev: &DeviationModel,
    region_width: f64,
    seed: u64,
    episode: u64,
    slot: u64,
) -> TwinStore {
    let loc_rate = dev.effective_loc_rate();
    let num_mus = input.mu_positions.len();
    let mus = (0..num_mus)
        .map(|k| {
            let mut rng = stream(seed, StreamTag::PositionNoise, episode, slot, k as u64);
            MuTwin {
                position: noisy_position(&input.mu_positions[k], loc_rate, region_width, &mut rng),
                task: input.tasks[k],
                est_local_freq: input.est_local_freqs[k],
            }
        })
        .collect();
    let uavs = (0..input.uav_positions.len())
        .map(|m| {
            let mut rng =
                stream(seed, StreamTag::PositionNoise, episode, slot, (num_mus + m) as u64);
            UavTwin {
                position: noisy_position(&input.uav_positions[m], loc_rate, region_width, &mut rng),
                association: input.associations[m].clone(),
                est_alloc_freq: input.est_alloc_freqs[m].clone(),
            }
        })
        .collect();
    TwinStore { mus, uavs }
}

/// One frequency deviation draw per (entity, slot) address.
pub fn freq_deviation_for(
    est_freq: f64,
    dev: &DeviationModel,
    seed: u64,
    episode: u64,
    slot: u64,
    entity: u64,
) -> f64 {
    let rate = dev.effective_freq_rate();
    if rate == 0.0 {
        return 0.0;
    }
    let mut rng = stream(seed, StreamTag::FreqDeviation, episode, slot, entity);
    draw_freq_deviation(est_freq, rate, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = stream(1, StreamTag::FreqDeviation, 0, 0, 0);
        assert_eq!(draw_freq_deviation(1e9, 0.0, &mut rng), 0.0);
        let p = Vec3::new(3.0, 4.0, 0.0);
        assert_eq!(noisy_position(&p, 0.0, 1000.0, &mut rng), p);
    }

    #[test]
    fn freq_deviation_bounded_and_positive_actual() {
        let mut rng = stream(2, StreamTag::FreqDeviation, 0, 0, 0);
        for _ in 0..10_000 {
            let dev = draw_freq_deviation(1e9, 0.25, &mut rng);
            assert!(dev.abs() <= 2.5e8);
            assert!(1e9 + dev > 0.0);
        }
    }

    #[test]
    fn freq_deviation_symmetric_mean() {
        let mut rng = stream(3, StreamTag::FreqDeviation, 0, 0, 0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += draw_freq_deviation(1e9, 0.25, &mut rng) / 1e9;
        }
        let mean = sum / n as f64;
        // Uniform[-0.25, 0.25]: sd = 0.25/sqrt(3).
        let se = 0.25 / 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn noisy_position_clamps_to_region() {
        let mut rng = stream(4, StreamTag::PositionNoise, 0, 0, 0);
        let w = 1000.0;
        for _ in 0..10_000 {
            let p = noisy_position(&Vec3::new(0.0, 0.0, 0.0), 0.5, w, &mut rng);
            assert!(p.x >= 0.0 && p.x <= w && p.y >= 0.0 && p.y <= w);
            assert_eq!(p.z, 0.0);
            // Offsets stay within half the region width at rate 0.5.
            assert!(p.x <= 0.5 * w && p.y <= 0.5 * w);
        }
    }

    fn demo_input() -> (Vec<Vec3>, Vec<TaskSpec>, Vec<f64>, Vec<Vec3>, Vec<Vec<bool>>, Vec<Vec<f64>>) {
        let mu_pos = vec![Vec3::new(10.0, 20.0, 0.0), Vec3::new(30.0, 40.0, 0.0)];
        let tasks = vec![
            TaskSpec { bits: 5e5, cycles_per_bit: 1000.0, deadline: 1.0 },
            TaskSpec { bits: 7e5, cycles_per_bit: 800.0, deadline: 1.0 },
        ];
        let freqs = vec![5e8, 7e8];
        let uav_pos = vec![Vec3::new(100.0, 100.0, 200.0)];
        let assoc = vec![vec![true, false]];
        let alloc = vec![vec![2e9, 0.0]];
        (mu_pos, tasks, freqs, uav_pos, assoc, alloc)
    }

    #[test]
    fn disabled_deviations_give_exact_twins() {
        let (mu_pos, tasks, freqs, uav_pos, assoc, alloc) = demo_input();
        let input = SyncInput {
            mu_positions: &mu_pos,
            tasks: &tasks,
            est_local_freqs: &freqs,
            uav_positions: &uav_pos,
            associations: &assoc,
            est_alloc_freqs: &alloc,
        };
        let twins = sync(&input, &DeviationModel::disabled(), 1000.0, 9, 0, 3);
        assert_eq!(twins.mus[0].position, mu_pos[0]);
        assert_eq!(twins.mus[1].task, tasks[1]);
        assert_eq!(twins.uavs[0].position, uav_pos[0]);
        assert_eq!(twins.uavs[0].est_alloc_freq, alloc[0]);
    }

    #[test]
    fn sync_is_deterministic_per_address() {
        let (mu_pos, tasks, freqs, uav_pos, assoc, alloc) = demo_input();
        let input = SyncInput {
            mu_positions: &mu_pos,
            tasks: &tasks,
            est_local_freqs: &freqs,
            uav_positions: &uav_pos,
            associations: &assoc,
            est_alloc_freqs: &alloc,
        };
        let dev = DeviationModel::uniform(0.25);
        let a = sync(&input, &dev, 1000.0, 9, 1, 3);
        let b = sync(&input, &dev, 1000.0, 9, 1, 3);
        assert_eq!(a, b);
        let c = sync(&input, &dev, 1000.0, 9, 1, 4);
        assert_ne!(a.mus[0].position, c.mus[0].position);
    }

    #[test]
    fn entity_draws_independent_of_order() {
        // The draw of MU 1 is the same whether or not MU 0 exists in the
        // store, because streams are addressed, not sequential.
        let (mu_pos, tasks, freqs, uav_pos, assoc, alloc) = demo_input();
        let dev = DeviationModel::uniform(0.2);
        let full = sync(
            &SyncInput {
                mu_positions: &mu_pos,
                tasks: &tasks,
                est_local_freqs: &freqs,
                uav_positions: &uav_pos,
                associations: &assoc,
                est_alloc_freqs: &alloc,
            },
            &dev,
            1000.0,
            9,
            0,
            5,
        );
        let mut rng = stream(9, StreamTag::PositionNoise, 0, 5, 1);
        let direct = noisy_position(&mu_pos[1], 0.2, 1000.0, &mut rng);
        assert_eq!(full.mus[1].position, direct);
    }
}
