//! Environment configuration: every physical and learning constant, fully
//! serializable. Defaults follow the published environment parameter table;
//! the desk profile shrinks the scenario for fast local runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dt::DeviationModel;
use crate::physics::{ChannelParams, MobilityParams, Vec3};
use crate::tasking::{TaskRanges, UavPowerParams};

#[derive(Debug, Error, PartialEq)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError { field, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Number of ground users (K).
    pub num_mus: usize,
    /// Number of UAVs (M).
    pub num_uavs: usize,
    /// Width of the square region, m.
    pub region_width: f64,
    /// Fixed UAV flight altitude, m.
    pub uav_altitude: f64,
    /// BS location (x, y, altitude).
    pub bs_position: Vec3,
    /// Slot duration, s; doubles as the task deadline.
    pub slot_duration: f64,
    /// Slots per period.
    pub slots_per_period: usize,
    pub channel: ChannelParams,
    pub uav_power: UavPowerParams,
    pub mobility: MobilityParams,
    pub deviation: DeviationModel,
    pub tasks: TaskRanges,
    /// MU uplink transmit power, W.
    pub mu_tx_power: f64,
    /// UAV relay transmit power, W.
    pub uav_tx_power: f64,
    /// Effective capacitance coefficient.
    pub kappa: f64,
    /// Maximum MU CPU frequency, Hz.
    pub f_max_local: f64,
    /// Maximum UAV CPU frequency, Hz.
    pub f_max_edge: f64,
    /// Maximum UAV speed, m/s.
    pub v_max: f64,
    /// Maximum UAV acceleration, m/s^2.
    pub a_max: f64,
    /// Minimum UAV-UAV safety distance, m.
    pub d_min: f64,
    /// UAV-to-associates distance shaping threshold, m.
    pub d_th: f64,
    /// Weight of UAV energy in the objective.
    pub weight_factor: f64,
    /// Latency penalty factor.
    pub penalty_latency: f64,
    /// Boundary penalty factor.
    pub penalty_boundary: f64,
    /// Collision penalty factor.
    pub penalty_collision: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_mus: 60,
            num_uavs: 10,
            region_width: 1000.0,
            uav_altitude: 200.0,
            bs_position: Vec3::new(-500.0, 0.0, 10.0),
            slot_duration: 1.0,
            slots_per_period: 60,
            channel: ChannelParams {
                los_a: 15.0,
                los_b: 0.5,
                ref_gain: 1e-3,
                pathloss_exp: 2.2,
                nlos_attenuation: 0.2,
                noise_density: 10f64.powf(-15.7),
                total_bandwidth: 50e6,
                relay_bandwidth: 10e6,
            },
            uav_power: UavPowerParams {
                blade_power: 39.04,
                induced_power: 79.07,
                tip_speed: 120.0,
                rotor_velocity: 3.6,
                drag_ratio: 0.6,
                solidity: 0.05,
                air_density: 1.225,
                disc_area: 0.503,
                blade_profile_squared: false,
            },
            mobility: MobilityParams {
                mu_speed: 0.5,
                mu_heading: 0.5,
                mean_speed: 1.0,
                mean_heading: 0.0,
                speed_noise_mean: 0.0,
                speed_noise_var: 1.0,
                heading_noise_mean: 0.0,
                heading_noise_var: 1.0,
            },
            deviation: DeviationModel::disabled(),
            tasks: TaskRanges {
                bits_min: 5e5,
                bits_max: 1.5e6,
                cycles_per_bit_min: 500.0,
                cycles_per_bit_max: 1500.0,
            },
            mu_tx_power: 0.2,
            uav_tx_power: 0.5,
            kappa: 1e-27,
            f_max_local: 1e9,
            f_max_edge: 10e9,
            v_max: 30.0,
            a_max: 5.0,
            d_min: 50.0,
            d_th: 300.0,
            weight_factor: 0.001,
            penalty_latency: 0.1,
            penalty_boundary: 0.1,
            penalty_collision: 0.1,
        }
    }
}

impl EnvConfig {
    /// Shrunk scenario for fast local runs: 6 MUs, 2 UAVs, 500 m region.
    pub fn desk_profile() -> Self {
        Self { num_mus: 6, num_uavs: 2, region_width: 500.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_mus < 1 {
            return Err(invalid("num_mus", "must be >= 1"));
        }
        if self.num_uavs < 1 {
            return Err(invalid("num_uavs", "must be >= 1"));
        }
        if !(self.region_width > 0.0) {
            return Err(invalid("region_width", "must be positive"));
        }
        if !(self.uav_altitude > 0.0) {
            return Err(invalid("uav_altitude", "must be positive"));
        }
        if !(self.slot_duration > 0.0) {
            return Err(invalid("slot_duration", "must be positive"));
        }
        if self.slots_per_period == 0 {
            return Err(invalid("slots_per_period", "must be >= 1"));
        }
        for (field, value) in [
            ("mobility.mu_speed", self.mobility.mu_speed),
            ("mobility.mu_heading", self.mobility.mu_heading),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(invalid(field, format!("memory factor must be in [0, 1], got {value}")));
            }
        }
        if self.mobility.speed_noise_var < 0.0 || self.mobility.heading_noise_var < 0.0 {
            return Err(invalid("mobility", "noise variances must be >= 0"));
        }
        if !(self.channel.total_bandwidth > 0.0) {
            return Err(invalid("channel.total_bandwidth", "must be positive"));
        }
        if !(self.channel.relay_bandwidth > 0.0) {
            return Err(invalid("channel.relay_bandwidth", "must be positive"));
        }
        if !(self.channel.los_a > 0.0 && self.channel.los_b > 0.0) {
            return Err(invalid("channel.los_a", "LoS constants must be positive"));
        }
        if !(self.channel.nlos_attenuation > 0.0 && self.channel.nlos_attenuation <= 1.0) {
            return Err(invalid("channel.nlos_attenuation", "must be in (0, 1]"));
        }
        if !(self.channel.pathloss_exp >= 2.0) {
            return Err(invalid("channel.pathloss_exp", "must be >= 2"));
        }
        if !(self.channel.ref_gain > 0.0) {
            return Err(invalid("channel.ref_gain", "must be positive"));
        }
        if !(self.channel.noise_density > 0.0) {
            return Err(invalid("channel.noise_density", "must be positive"));
        }
        for (field, value) in [
            ("uav_power.blade_power", self.uav_power.blade_power),
            ("uav_power.induced_power", self.uav_power.induced_power),
            ("uav_power.tip_speed", self.uav_power.tip_speed),
            ("uav_power.rotor_velocity", self.uav_power.rotor_velocity),
            ("uav_power.drag_ratio", self.uav_power.drag_ratio),
            ("uav_power.solidity", self.uav_power.solidity),
            ("uav_power.air_density", self.uav_power.air_density),
            ("uav_power.disc_area", self.uav_power.disc_area),
        ] {
            if !(value > 0.0) {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if self.deviation.freq_rate < 0.0 || self.deviation.freq_rate >= 1.0 {
            return Err(invalid("deviation.freq_rate", "must be in [0, 1)"));
        }
        if self.deviation.loc_rate < 0.0 || self.deviation.loc_rate >= 1.0 {
            return Err(invalid("deviation.loc_rate", "must be in [0, 1)"));
        }
        if !(self.tasks.bits_min > 0.0) {
            return Err(invalid("tasks.bits_min", "must be positive"));
        }
        if self.tasks.bits_max < self.tasks.bits_min {
            return Err(invalid("tasks.bits_max", "must be >= tasks.bits_min"));
        }
        if !(self.tasks.cycles_per_bit_min > 0.0) {
            return Err(invalid("tasks.cycles_per_bit_min", "must be positive"));
        }
        if self.tasks.cycles_per_bit_max < self.tasks.cycles_per_bit_min {
            return Err(invalid("tasks.cycles_per_bit_max", "must be >= cycles_per_bit_min"));
        }
        for (field, value) in [
            ("mu_tx_power", self.mu_tx_power),
            ("uav_tx_power", self.uav_tx_power),
            ("kappa", self.kappa),
            ("f_max_local", self.f_max_local),
            ("f_max_edge", self.f_max_edge),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
        ] {
            if !(value > 0.0) {
                return Err(invalid(field, format!("must be positive, got {value}")));
            }
        }
        if !(self.d_min < self.d_th) {
            return Err(invalid("d_min", "must be smaller than d_th"));
        }
        if !(self.d_th <= self.region_width) {
            return Err(invalid("d_th", "must be <= region_width"));
        }
        if self.weight_factor < 0.0 {
            return Err(invalid("weight_factor", "must be >= 0"));
        }
        if self.penalty_latency < 0.0 || self.penalty_boundary < 0.0 || self.penalty_collision < 0.0
        {
            return Err(invalid("penalty_latency", "penalty factors must be >= 0"));
        }
        Ok(())
    }
}
