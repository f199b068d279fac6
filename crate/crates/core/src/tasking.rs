//! Task generation, DVFS local/edge computing latency (including the
//! digital-twin deviation gaps), and every energy formula.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TaskingError {
    #[error("estimated frequency must be positive, got {0}")]
    NonPositiveEstimate(f64),
    #[error("actual frequency (estimate + deviation) must be positive, got {0}")]
    NonPositiveActual(f64),
}

/// One divisible, deadline-constrained task: input bits and the cycles needed
/// per bit. The deadline is the slot duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Input data size, bits.
    pub bits: f64,
    /// CPU cycles per bit.
    pub cycles_per_bit: f64,
    /// Completion deadline, seconds (= slot duration).
    pub deadline: f64,
}

impl TaskSpec {
    /// Bits offloaded at proportion `rho`.
    pub fn offload_bits(&self, rho: f64) -> f64 {
        rho * self.bits
    }

    /// Bits kept local; defined as the exact complement of the offloaded bits
    /// so local + offloaded always reconstructs the task size.
    pub fn local_bits(&self, rho: f64) -> f64 {
        self.bits - self.offload_bits(rho)
    }

    /// Local computing cycles at proportion `rho`.
    pub fn local_cycles(&self, rho: f64) -> f64 {
        self.local_bits(rho) * self.cycles_per_bit
    }

    /// Edge computing cycles at proportion `rho`.
    pub fn edge_cycles(&self, rho: f64) -> f64 {
        self.offload_bits(rho) * self.cycles_per_bit
    }
}

/// Uniform sampling ranges for task generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRanges {
    pub bits_min: f64,
    pub bits_max: f64,
    pub cycles_per_bit_min: f64,
    pub cycles_per_bit_max: f64,
}

/// Rotary-wing propulsion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavPowerParams {
    /// Blade profile power in hover, W.
    pub blade_power: f64,
    /// Induced power in hover, W.
    pub induced_power: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub rotor_velocity: f64,
    /// Fuselage drag ratio.
    pub drag_ratio: f64,
    /// Rotor solidity.
    pub solidity: f64,
    /// Air density, kg/m^3.
    pub air_density: f64,
    /// Rotor disc area, m^2.
    pub disc_area: f64,
    /// Blade-profile speed correction exponent switch: the model is usually
    /// written with v^2 / tip_speed^2; the variant implemented by default
    /// uses v^3 as printed in the source formulation.
    pub blade_profile_squared: bool,
}

/// Per-slot computation outcome for one MU, split by route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComputeOutcome {
    pub local_time: f64,
    pub edge_time: f64,
    pub mu_energy: f64,
    pub uav_energy_compute: f64,
    pub deadline_violation_local: f64,
    pub deadline_violation_edge: f64,
}

/// Where the offloaded part of a task is executed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeRoute {
    /// Executed on the serving UAV with the given estimated frequency
    /// allocation and its deviation.
    UavCompute { est_freq: f64, freq_dev: f64 },
    /// Relayed by the serving UAV to the BS at the given relay rate; BS
    /// compute time and energy are out of the model.
    BsRelay { relay_rate: f64 },
}

/// Outcome of the offloaded pipeline of one MU for one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EdgeOutcome {
    pub offload_time: f64,
    pub edge_time: f64,
    pub mu_offload_energy: f64,
    pub uav_compute_energy: f64,
    /// Set when the slot was infeasible (offloading requested over a dead
    /// link or with no allocated frequency) and charged as a full violation.
    pub infeasible: bool,
}

/// Draw a fresh task with uniform size and per-bit cycle count.
pub fn generate_task(ranges: &TaskRanges, deadline: f64, rng: &mut impl Rng) -> TaskSpec {
    TaskSpec {
        bits: sample_range(ranges.bits_min, ranges.bits_max, rng),
        cycles_per_bit: sample_range(ranges.cycles_per_bit_min, ranges.cycles_per_bit_max, rng),
        deadline,
    }
}

fn sample_range(lo: f64, hi: f64, rng: &mut impl Rng) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// DVFS estimate: the minimum CPU frequency that finishes the local share by
/// the deadline, capped at the hardware maximum. Zero when everything is
/// offloaded.
pub fn required_local_frequency(task: &TaskSpec, rho: f64, dt: f64, f_max: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&rho));
    let cycles = task.local_cycles(rho);
    if cycles == 0.0 {
        return 0.0;
    }
    (cycles / dt).min(f_max)
}

/// Latency gap between the twin estimate and the actual execution caused by a
/// frequency deviation: `-Y * f_dev / (f_est * (f_est + f_dev))`, identically
/// `Y/(f_est + f_dev) - Y/f_est`.
pub fn latency_gap(cycles: f64, est_freq: f64, freq_dev: f64) -> Result<f64, TaskingError> {
    if est_freq <= 0.0 {
        return Err(TaskingError::NonPositiveEstimate(est_freq));
    }
    let actual = est_freq + freq_dev;
    if actual <= 0.0 {
        return Err(TaskingError::NonPositiveActual(actual));
    }
    Ok(-cycles * freq_dev / (est_freq * actual))
}

/// Local execution time and energy. The estimated frequency comes from
/// `required_local_frequency`; the deviation shifts the actual frequency and
/// hence both time (through the latency gap) and energy.
pub fn local_compute(
    task: &TaskSpec,
    rho: f64,
    est_freq: f64,
    freq_dev: f64,
    kappa: f64,
) -> (f64, f64) {
    let cycles = task.local_cycles(rho);
    if cycles == 0.0 {
        return (0.0, 0.0);
    }
    let gap = latency_gap(cycles, est_freq, freq_dev).expect("local frequency must be positive");
    let time = cycles / est_freq + gap;
    let actual = est_freq + freq_dev;
    let energy = kappa * actual * actual * cycles;
    (time, energy)
}

/// The offloaded pipeline: uplink transfer plus either UAV computation (with
/// its twin latency gap) or BS relay. A requested offload over a dead link is
/// charged as a full one-slot violation so the environment stays total.
pub fn edge_pipeline(
    task: &TaskSpec,
    rho: f64,
    uplink_rate: f64,
    route: EdgeRoute,
    mu_tx_power: f64,
    kappa: f64,
    dt: f64,
) -> EdgeOutcome {
    let bits = task.offload_bits(rho);
    if bits == 0.0 {
        return EdgeOutcome::default();
    }
    if uplink_rate <= 0.0 {
        return infeasible_slot(mu_tx_power, dt);
    }
    let offload_time = bits / uplink_rate;
    let mu_offload_energy = mu_tx_power * offload_time;
    match route {
        EdgeRoute::BsRelay { relay_rate } => {
            if relay_rate <= 0.0 {
                return infeasible_slot(mu_tx_power, dt);
            }
            EdgeOutcome {
                offload_time,
                edge_time: offload_time + bits / relay_rate,
                mu_offload_energy,
                uav_compute_energy: 0.0,
                infeasible: false,
            }
        }
        EdgeRoute::UavCompute { est_freq, freq_dev } => {
            if est_freq <= 0.0 {
                return infeasible_slot(mu_tx_power, dt);
            }
            let cycles = task.edge_cycles(rho);
            let gap = latency_gap(cycles, est_freq, freq_dev)
                .expect("edge frequency checked positive");
            let actual = est_freq + freq_dev;
            EdgeOutcome {
                offload_time,
                edge_time: offload_time + cycles / est_freq + gap,
                mu_offload_energy,
                uav_compute_energy: kappa * actual * actual * cycles,
                infeasible: false,
            }
        }
    }
}

fn infeasible_slot(mu_tx_power: f64, dt: f64) -> EdgeOutcome {
    EdgeOutcome {
        offload_time: dt,
        edge_time: 2.0 * dt,
        mu_offload_energy: mu_tx_power * dt,
        uav_compute_energy: 0.0,
        infeasible: true,
    }
}

/// Rotary-wing propulsion energy over one slot at ground speed `v`.
pub fn propulsion_energy(v: f64, pp: &UavPowerParams, dt: f64) -> f64 {
    debug_assert!(v >= 0.0);
    let v2 = v * v;
    let v3 = v2 * v;
    let v4 = v2 * v2;
    let parasite = 0.5 * pp.drag_ratio * pp.air_density * pp.solidity * pp.disc_area * v3;
    let tip_term = if pp.blade_profile_squared { v2 } else { v3 };
    let blade = pp.blade_power * (1.0 + 3.0 * tip_term / (pp.tip_speed * pp.tip_speed));
    let v0_2 = pp.rotor_velocity * pp.rotor_velocity;
    let induced = pp.induced_power * ((1.0 + v4 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2));
    dt * (parasite + blade + induced)
}

/// The scalar objective: UAV energy weighted against MU energy.
pub fn weighted_objective(uav_energies: &[f64], mu_energies: &[f64], weight: f64) -> f64 {
    weight * uav_energies.iter().sum::<f64>() + mu_energies.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    pub(crate) fn power_params() -> UavPowerParams {
        UavPowerParams {
            blade_power: 39.04,
            induced_power: 79.07,
            tip_speed: 120.0,
            rotor_velocity: 3.6,
            drag_ratio: 0.6,
            solidity: 0.05,
            air_density: 1.225,
            disc_area: 0.503,
            blade_profile_squared: false,
        }
    }

    fn task(bits: f64, cpb: f64) -> TaskSpec {
        TaskSpec { bits, cycles_per_bit: cpb, deadline: 1.0 }
    }

    #[test]
    fn generate_task_degenerate_and_range() {
        let ranges = TaskRanges {
            bits_min: 5e5,
            bits_max: 5e5,
            cycles_per_bit_min: 1000.0,
            cycles_per_bit_max: 1000.0,
        };
        let mut rng = stream(1, StreamTag::TaskGen, 0, 0, 0);
        let t = generate_task(&ranges, 1.0, &mut rng);
        assert_eq!(t.bits, 5e5);
        assert_eq!(t.cycles_per_bit, 1000.0);

        let ranges = TaskRanges {
            bits_min: 5e5,
            bits_max: 1.5e6,
            cycles_per_bit_min: 500.0,
            cycles_per_bit_max: 1500.0,
        };
        for _ in 0..10_000 {
            let t = generate_task(&ranges, 1.0, &mut rng);
            assert!(t.bits >= 5e5 && t.bits <= 1.5e6);
            assert!(t.cycles_per_bit >= 500.0 && t.cycles_per_bit <= 1500.0);
        }
    }

    #[test]
    fn dvfs_frequency_boundaries() {
        assert_abs_diff_eq!(
            required_local_frequency(&task(1e6, 1000.0), 0.0, 1.0, 1e9),
            1e9,
            epsilon = 1.0
        );
        assert_eq!(required_local_frequency(&task(1e6, 1000.0), 1.0, 1.0, 1e9), 0.0);
        assert_abs_diff_eq!(
            required_local_frequency(&task(8e5, 1000.0), 0.5, 1.0, 1e9),
            4e8,
            epsilon = 1.0
        );
    }

    #[test]
    fn dvfs_minimality() {
        // In the unconstrained regime the DVFS estimate meets the deadline
        // exactly, and any slightly smaller frequency misses it.
        let mut rng = stream(5, StreamTag::TaskGen, 0, 0, 0);
        for _ in 0..1000 {
            let t = task(rng.gen_range(1e5..9e5), rng.gen_range(500.0..1100.0));
            let rho = rng.gen_range(0.0..0.9);
            let f = required_local_frequency(&t, rho, 1.0, 1e9);
            let cycles = t.local_cycles(rho);
            if cycles / 1.0 <= 1e9 {
                assert!((cycles / f - 1.0).abs() < 1e-9);
                assert!(cycles / (f * (1.0 - 1e-6)) > 1.0);
            } else {
                assert_eq!(f, 1e9);
            }
        }
    }

    #[test]
    fn latency_gap_contract() {
        assert_eq!(latency_gap(1e9, 1e9, 0.0).unwrap(), 0.0);
        // Frozen independent evaluation: Y/(f+dev) - Y/f = 1e9/9e8 - 1 = 1/9.
        assert_relative_eq!(latency_gap(1e9, 1e9, -1e8).unwrap(), 1.0 / 9.0, max_relative = 1e-12);
        assert!(latency_gap(1e9, 1e9, 0.1e9).unwrap() < 0.0);
        assert!(latency_gap(1e9, 1e9, -0.1e9).unwrap() > 0.0);
        assert!(latency_gap(1e9, 1e9, -1e9).is_err());
        assert!(latency_gap(1e9, 0.0, 1.0).is_err());
    }

    #[test]
    fn latency_gap_algebraic_identity() {
        let mut rng = stream(6, StreamTag::TaskGen, 0, 0, 0);
        for _ in 0..10_000 {
            let y = rng.gen_range(1e6..1e10);
            let f = rng.gen_range(1e7..1e10);
            let dev = f * rng.gen_range(-0.9..0.9);
            let gap = latency_gap(y, f, dev).unwrap();
            let direct = y / (f + dev);
            assert_relative_eq!(y / f + gap, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn local_compute_examples() {
        // kappa * f^2 * Y at f = 1 GHz, Y = 1e9 cycles is exactly 1 J.
        let t = task(1e6, 1000.0);
        let (time, energy) = local_compute(&t, 0.0, 1e9, 0.0, 1e-27);
        assert_abs_diff_eq!(time, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(energy, 1.0, epsilon = 1e-12);

        let (time, energy) = local_compute(&t, 1.0, 0.0, 0.0, 1e-27);
        assert_eq!((time, energy), (0.0, 0.0));
    }

    #[test]
    fn edge_pipeline_examples() {
        let t = task(1e6, 1000.0);
        // Fully local: all edge terms zero.
        assert_eq!(
            edge_pipeline(&t, 0.0, 1e7, EdgeRoute::BsRelay { relay_rate: 1e7 }, 0.2, 1e-27, 1.0),
            EdgeOutcome::default()
        );

        // Two-hop BS relay sum.
        let out =
            edge_pipeline(&t, 1.0, 4e6, EdgeRoute::BsRelay { relay_rate: 1e7 }, 0.2, 1e-27, 1.0);
        assert_abs_diff_eq!(out.edge_time, 0.25 + 0.1, epsilon = 1e-12);
        assert!(!out.infeasible);

        // UAV compute with zero deviation.
        let out = edge_pipeline(
            &t,
            0.5,
            2e6,
            EdgeRoute::UavCompute { est_freq: 2e9, freq_dev: 0.0 },
            0.2,
            1e-27,
            1.0,
        );
        assert_abs_diff_eq!(out.offload_time, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(out.edge_time, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.mu_offload_energy, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn edge_pipeline_dead_link_is_full_violation() {
        let t = task(1e6, 1000.0);
        let out = edge_pipeline(&t, 0.5, 0.0, EdgeRoute::BsRelay { relay_rate: 1e7 }, 0.2, 1e-27, 1.0);
        assert!(out.infeasible);
        assert_abs_diff_eq!(out.edge_time, 2.0, epsilon = 1e-12);
        let out = edge_pipeline(
            &t,
            0.5,
            1e6,
            EdgeRoute::UavCompute { est_freq: 0.0, freq_dev: 0.0 },
            0.2,
            1e-27,
            1.0,
        );
        assert!(out.infeasible);
    }

    #[test]
    fn task_conservation_exact() {
        let mut rng = stream(8, StreamTag::TaskGen, 0, 0, 0);
        for _ in 0..10_000 {
            let t = task(rng.gen_range(5e5..1.5e6), 1000.0);
            let rho: f64 = rng.gen();
            // (b - o) + o reconstructs b to within one ulp.
            assert_relative_eq!(
                t.local_bits(rho) + t.offload_bits(rho),
                t.bits,
                max_relative = f64::EPSILON
            );
        }
    }

    #[test]
    fn hover_energy_analytic() {
        let e = propulsion_energy(0.0, &power_params(), 1.0);
        assert_abs_diff_eq!(e, 118.11, epsilon = 1e-9);
        // Linearity in the slot duration.
        assert_abs_diff_eq!(propulsion_energy(12.0, &power_params(), 2.0),
            2.0 * propulsion_energy(12.0, &power_params(), 1.0), epsilon = 1e-9);
    }

    #[test]
    fn propulsion_parasite_asymptotics() {
        let pp = power_params();
        let v = 200.0;
        let e = propulsion_energy(v, &pp, 1.0);
        // At high speed the parasite drag v^3 term and the blade profile v^3
        // correction dominate while the induced term vanishes.
        let parasite = 0.5 * pp.drag_ratio * pp.air_density * pp.solidity * pp.disc_area * v.powi(3);
        let blade = pp.blade_power * (1.0 + 3.0 * v.powi(3) / (pp.tip_speed * pp.tip_speed));
        assert_relative_eq!(e / (parasite + blade), 1.0, max_relative = 1e-2);
    }

    #[test]
    fn propulsion_curve_has_interior_minimum() {
        let pp = power_params();
        let hover = propulsion_energy(0.0, &pp, 1.0);
        let mut best = hover;
        let mut prev = hover;
        for i in 1..=300 {
            let v = i as f64 * 0.1;
            let e = propulsion_energy(v, &pp, 1.0);
            // Continuity on the grid.
            assert!((e - prev).abs() < 10.0);
            prev = e;
            best = best.min(e);
        }
        assert!(best < hover);
    }

    #[test]
    fn weighted_objective_arithmetic() {
        assert_abs_diff_eq!(weighted_objective(&[100.0], &[1.0, 2.0], 0.0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(weighted_objective(&[100.0], &[1.0, 2.0], 0.001), 3.1, epsilon = 1e-12);
        assert_abs_diff_eq!(
            weighted_objective(&[3.0, 100.0], &[2.0, 1.0], 0.001),
            weighted_objective(&[100.0, 3.0], &[1.0, 2.0], 0.001),
            epsilon = 1e-12
        );
    }

    #[test]
    fn energies_non_negative() {
        let mut rng = stream(11, StreamTag::TaskGen, 0, 0, 0);
        for _ in 0..2000 {
            let t = task(rng.gen_range(5e5..1.5e6), rng.gen_range(500.0..1500.0));
            let rho: f64 = rng.gen();
            let f = required_local_frequency(&t, rho, 1.0, 1e9);
            if f > 0.0 {
                let dev = f * rng.gen_range(-0.25..0.25);
                let (_, e) = local_compute(&t, rho, f, dev, 1e-27);
                assert!(e >= 0.0);
            }
            assert!(propulsion_energy(rng.gen_range(0.0..30.0), &power_params(), 1.0) >= 0.0);
        }
    }
}
