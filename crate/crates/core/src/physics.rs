//! Ground-user mobility and all air-ground / air-BS channel and rate math.
//!
//! Everything here is a pure function over value inputs plus an explicit RNG
//! handle, so workers with distinct streams can call it concurrently.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("transmitter and receiver are co-located (zero distance)")]
    CoLocated,
}

/// A point in the 3-D Cartesian frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Vec3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Ground-user kinematic state. Positions live in the z = 0 plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuKinematics {
    pub position: Vec3,
    /// Speed magnitude, m/s; clamped to be non-negative after each update.
    pub speed: f64,
    /// Heading, radians.
    pub heading: f64,
}

/// Gauss-Markov mobility constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    /// Speed memory factor, in [0, 1].
    pub mu_speed: f64,
    /// Heading memory factor, in [0, 1].
    pub mu_heading: f64,
    /// Mean speed, m/s.
    pub mean_speed: f64,
    /// Mean heading, radians.
    pub mean_heading: f64,
    /// Mean of the speed noise draw.
    pub speed_noise_mean: f64,
    /// Variance of the speed noise draw.
    pub speed_noise_var: f64,
    /// Mean of the heading noise draw.
    pub heading_noise_mean: f64,
    /// Variance of the heading noise draw.
    pub heading_noise_var: f64,
}

/// Channel constants for the probabilistic LoS air-ground links and the
/// LoS air-BS relay link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// LoS environment constant `a` (dimensionless).
    pub los_a: f64,
    /// LoS environment constant `b` (dimensionless).
    pub los_b: f64,
    /// Reference channel power gain at 1 m, linear.
    pub ref_gain: f64,
    /// Path-loss exponent.
    pub pathloss_exp: f64,
    /// NLoS attenuation factor, linear, in (0, 1].
    pub nlos_attenuation: f64,
    /// Noise power density, W/Hz.
    pub noise_density: f64,
    /// Total shared uplink bandwidth, Hz.
    pub total_bandwidth: f64,
    /// Relay bandwidth per UAV, Hz (outside the shared budget).
    pub relay_bandwidth: f64,
}

/// One Gauss-Markov update: speed and heading evolve with fresh Gaussian
/// draws, the position advances with the pre-update speed/heading, and the
/// result is clamped to the region box `[0, width]^2`.
pub fn step_mobility(
    state: &MuKinematics,
    p: &MobilityParams,
    dt: f64,
    region_width: f64,
    rng: &mut impl Rng,
) -> MuKinematics {
    debug_assert!(dt > 0.0);
    let phi = gaussian_draw(p.speed_noise_mean, p.speed_noise_var, rng);
    let psi = gaussian_draw(p.heading_noise_mean, p.heading_noise_var, rng);

    let speed = p.mu_speed * state.speed
        + (1.0 - p.mu_speed) * p.mean_speed
        + (1.0 - p.mu_speed * p.mu_speed).sqrt() * phi;
    let heading = p.mu_heading * state.heading
        + (1.0 - p.mu_heading) * p.mean_heading
        + (1.0 - p.mu_heading * p.mu_heading).sqrt() * psi;

    // Position advances with the pre-update speed and heading.
    let x = state.position.x + state.speed * state.heading.cos() * dt;
    let y = state.position.y + state.speed * state.heading.sin() * dt;

    MuKinematics {
        position: Vec3::new(x.clamp(0.0, region_width), y.clamp(0.0, region_width), 0.0),
        speed: speed.max(0.0),
        heading,
    }
}

fn gaussian_draw(mean: f64, var: f64, rng: &mut impl Rng) -> f64 {
    if var == 0.0 {
        return mean;
    }
    Normal::new(mean, var.sqrt()).expect("finite noise parameters").sample(rng)
}

/// Elevation angle from a ground point to an airborne point, degrees.
/// Uses the horizontal distance in the denominator so an overhead UAV sees
/// exactly 90 degrees.
pub fn elevation_angle_deg(ground: &Vec3, air: &Vec3) -> f64 {
    debug_assert!(air.z > ground.z);
    let h = air.z - ground.z;
    let d = ground.horizontal_distance(air);
    if d == 0.0 {
        return 90.0;
    }
    (h / d).atan().to_degrees()
}

/// Sigmoid LoS probability in the elevation angle, strictly inside (0, 1).
pub fn los_probability(elevation_deg: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * (-b * (elevation_deg - a)).exp())
}

/// Expected air-ground channel power gain: the LoS/NLoS probability mixture
/// over the 3-D distance raised to the path-loss exponent.
pub fn air_ground_gain(ground: &Vec3, air: &Vec3, cp: &ChannelParams) -> Result<f64, PhysicsError> {
    let d = ground.distance(air);
    if d == 0.0 {
        return Err(PhysicsError::CoLocated);
    }
    let theta = elevation_angle_deg(ground, air);
    let p_los = los_probability(theta, cp.los_a, cp.los_b);
    let mix = p_los + cp.nlos_attenuation * (1.0 - p_los);
    Ok(cp.ref_gain * mix / d.powf(cp.pathloss_exp))
}

/// Quasi-static LoS relay gain between a UAV and the BS (inverse square).
pub fn relay_gain(air: &Vec3, bs: &Vec3, ref_gain: f64) -> Result<f64, PhysicsError> {
    let d = air.distance(bs);
    if d == 0.0 {
        return Err(PhysicsError::CoLocated);
    }
    Ok(ref_gain / (d * d))
}

/// Shannon uplink rate over an orthogonal slice of bandwidth, bits/s.
/// Zero bandwidth maps to a zero rate (the continuous limit of
/// `B * log2(1 + c/B)` as B goes to 0).
pub fn uplink_rate(bandwidth: f64, tx_power: f64, gain: f64, noise_density: f64) -> f64 {
    debug_assert!(bandwidth >= 0.0);
    if bandwidth == 0.0 {
        return 0.0;
    }
    bandwidth * (1.0 + tx_power * gain / (bandwidth * noise_density)).log2()
}

/// UAV-to-BS relay rate; same contract as `uplink_rate` with the relay slice.
pub fn relay_rate(relay_bandwidth: f64, tx_power: f64, gain: f64, noise_density: f64) -> f64 {
    uplink_rate(relay_bandwidth, tx_power, gain, noise_density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn channel() -> ChannelParams {
        ChannelParams {
            los_a: 15.0,
            los_b: 0.5,
            ref_gain: 1e-3,
            pathloss_exp: 2.2,
            nlos_attenuation: 0.2,
            noise_density: 10f64.powf(-15.7),
            total_bandwidth: 50e6,
            relay_bandwidth: 10e6,
        }
    }

    fn mobility() -> MobilityParams {
        MobilityParams {
            mu_speed: 0.5,
            mu_heading: 0.5,
            mean_speed: 1.0,
            mean_heading: 0.3,
            speed_noise_mean: 0.0,
            speed_noise_var: 1.0,
            heading_noise_mean: 0.0,
            heading_noise_var: 1.0,
        }
    }

    #[test]
    fn full_memory_keeps_speed() {
        let mut p = mobility();
        p.mu_speed = 1.0;
        let state = MuKinematics { position: Vec3::new(10.0, 5.0, 0.0), speed: 2.5, heading: 0.0 };
        let mut rng = stream(1, StreamTag::Mobility, 0, 0, 0);
        let next = step_mobility(&state, &p, 1.0, 1000.0, &mut rng);
        assert_abs_diff_eq!(next.speed, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn memoryless_limit_is_mean_plus_draw() {
        // With zero memory and degenerate (zero-variance) noise shifted to a
        // fixed mean, the update is exactly mean + draw.
        let mut p = mobility();
        p.mu_speed = 0.0;
        p.mu_heading = 0.0;
        p.speed_noise_mean = 0.3;
        p.speed_noise_var = 0.0;
        p.heading_noise_mean = 0.1;
        p.heading_noise_var = 0.0;
        let state = MuKinematics { position: Vec3::new(0.0, 0.0, 0.0), speed: 9.0, heading: 2.0 };
        let mut rng = stream(1, StreamTag::Mobility, 0, 0, 0);
        let next = step_mobility(&state, &p, 1.0, 1000.0, &mut rng);
        assert_abs_diff_eq!(next.speed, p.mean_speed + 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(next.heading, p.mean_heading + 0.1, epsilon = 1e-12);
    }

    #[test]
    fn position_advances_with_pre_update_velocity() {
        let p = mobility();
        let state = MuKinematics { position: Vec3::new(10.0, 5.0, 0.0), speed: 2.0, heading: 0.0 };
        let mut rng = stream(1, StreamTag::Mobility, 0, 0, 0);
        let next = step_mobility(&state, &p, 1.0, 1000.0, &mut rng);
        assert_abs_diff_eq!(next.position.x, 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.position.y, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_mean_matches_monte_carlo() {
        // With mu = 0.5 and zero-mean noise the stationary mean of the speed
        // recursion is the configured mean speed (before the >= 0 clamp,
        // which we avoid by keeping the mean well above the noise scale).
        let mut p = mobility();
        p.mean_speed = 20.0;
        let mut rng = stream(42, StreamTag::Mobility, 0, 0, 0);
        let mut state =
            MuKinematics { position: Vec3::new(500.0, 500.0, 0.0), speed: p.mean_speed, heading: 0.0 };
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            state = step_mobility(&state, &p, 1.0, 1000.0, &mut rng);
            sum += state.speed;
            sum_sq += state.speed * state.speed;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // The chain is autocorrelated (rho = 0.5), widen the naive standard
        // error by the integrated autocorrelation factor sqrt((1+rho)/(1-rho)).
        let se = (var / n as f64).sqrt() * ((1.0 + 0.5) / (1.0 - 0.5f64)).sqrt();
        assert!((mean - p.mean_speed).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn deterministic_straight_line_with_full_memory() {
        let mut p = mobility();
        p.mu_speed = 1.0;
        p.mu_heading = 1.0;
        let start = MuKinematics { position: Vec3::new(100.0, 100.0, 0.0), speed: 1.0, heading: 0.7 };
        let run = |seed: u64| {
            let mut rng = stream(seed, StreamTag::Mobility, 0, 0, 0);
            let mut s = start;
            for _ in 0..50 {
                s = step_mobility(&s, &p, 1.0, 1000.0, &mut rng);
            }
            s
        };
        let a = run(3);
        let b = run(4);
        // Noise coefficients vanish, so even different streams agree bit-wise.
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.position.x, 100.0 + 50.0 * 0.7f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn elevation_angle_anchors() {
        let g = Vec3::new(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(elevation_angle_deg(&g, &Vec3::new(200.0, 0.0, 200.0)), 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(elevation_angle_deg(&g, &Vec3::new(0.0, 0.0, 200.0)), 90.0, epsilon = 1e-12);
        let d = 200.0 * 3f64.sqrt();
        assert_abs_diff_eq!(elevation_angle_deg(&g, &Vec3::new(d, 0.0, 200.0)), 30.0, epsilon = 1e-10);
    }

    #[test]
    fn los_probability_anchor_and_limits() {
        assert_abs_diff_eq!(los_probability(15.0, 15.0, 0.5), 1.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(los_probability(15.0, 15.0, 2.0), 1.0 / 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(los_probability(90.0, 15.0, 0.5), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn los_probability_monotone_and_bounded() {
        let mut prev = -1.0;
        for i in 0..=900 {
            let theta = i as f64 * 0.1;
            let p = los_probability(theta, 15.0, 0.5);
            assert!(p > 0.0 && p < 1.0);
            // Strictly increasing until the sigmoid saturates to the f64 ulp.
            if theta <= 60.0 {
                assert!(p > prev);
            } else {
                assert!(p >= prev);
            }
            prev = p;
        }
    }

    #[test]
    fn air_ground_gain_limits_and_oracle() {
        let cp = channel();
        // Pure LoS at reference distance: an overhead link 1 m up has
        // P_LoS(90) = 1 within 1e-9.
        let g = air_ground_gain(&Vec3::new(0.0, 0.0, 0.0), &Vec3::new(0.0, 0.0, 1.0), &cp).unwrap();
        assert_relative_eq!(g, cp.ref_gain, max_relative = 1e-9);

        // Independent scalar evaluation, frozen from a high-precision oracle:
        // u=(0,0,0), q=(0,200*sqrt(3),200) -> d=400, theta=30 deg.
        let q = Vec3::new(0.0, 200.0 * 3f64.sqrt(), 200.0);
        let g = air_ground_gain(&Vec3::new(0.0, 0.0, 0.0), &q, &cp).unwrap();
        assert_relative_eq!(g, 1.87326779864221509e-9, max_relative = 1e-9);

        assert_eq!(
            air_ground_gain(&Vec3::new(1.0, 2.0, 3.0), &Vec3::new(1.0, 2.0, 3.0), &cp),
            Err(PhysicsError::CoLocated)
        );
    }

    #[test]
    fn air_ground_gain_between_nlos_and_los_envelopes() {
        let cp = channel();
        let mut rng = stream(9, StreamTag::Mobility, 0, 0, 1);
        for _ in 0..1000 {
            let u = Vec3::new(rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0, 0.0);
            let q = Vec3::new(rng.gen::<f64>() * 1000.0, rng.gen::<f64>() * 1000.0, 200.0);
            let d = u.distance(&q);
            let g = air_ground_gain(&u, &q, &cp).unwrap();
            let lo = cp.nlos_attenuation * cp.ref_gain / d.powf(cp.pathloss_exp);
            let hi = cp.ref_gain / d.powf(cp.pathloss_exp);
            assert!(g >= lo && g <= hi);
        }
    }

    #[test]
    fn relay_gain_inverse_square() {
        let bs = Vec3::new(0.0, 0.0, 0.0);
        let g1 = relay_gain(&Vec3::new(1.0, 0.0, 0.0), &bs, 1e-3).unwrap();
        assert_abs_diff_eq!(g1, 1e-3, epsilon = 1e-18);
        let g2 = relay_gain(&Vec3::new(2.0, 0.0, 0.0), &bs, 1e-3).unwrap();
        assert_relative_eq!(g1 / g2, 4.0, max_relative = 1e-12);

        let g = relay_gain(&Vec3::new(0.0, 0.0, 200.0), &Vec3::new(-500.0, 0.0, 10.0), 1e-3).unwrap();
        assert_relative_eq!(g, 1e-3 / (500.0f64 * 500.0 + 190.0 * 190.0), max_relative = 1e-12);
    }

    #[test]
    fn uplink_rate_anchors() {
        // SNR = 1 -> rate equals the bandwidth.
        let b = 2e6;
        let n0 = 1e-15;
        let rate = uplink_rate(b, 1.0, b * n0, n0);
        assert_relative_eq!(rate, b, max_relative = 1e-12);

        assert_eq!(uplink_rate(0.0, 0.2, 1e-9, 1e-15), 0.0);

        // Frozen from an independent one-line calculator.
        let rate = uplink_rate(1e6, 0.2, 1e-9, 10f64.powf(-15.7));
        assert_relative_eq!(rate, 1_001_711.8001140623, max_relative = 1e-9);
    }

    #[test]
    fn relay_rate_oracle() {
        let n0 = 10f64.powf(-15.7);
        let gain = 1e-3 / (500.0f64 * 500.0 + 190.0 * 190.0);
        let rate = relay_rate(10e6, 0.5, gain, n0);
        assert_relative_eq!(rate, 9_075_792.318024513, max_relative = 1e-9);
        assert_eq!(relay_rate(0.0, 0.5, gain, n0), 0.0);
    }

    #[test]
    fn uplink_rate_monotone_and_midpoint_concave_in_bandwidth() {
        let n0 = 10f64.powf(-15.7);
        let mut prev = 0.0;
        for i in 1..=100 {
            let g = i as f64 * 1e-11;
            let r = uplink_rate(1e6, 0.2, g, n0);
            assert!(r >= prev);
            prev = r;
        }
        // Discrete midpoint concavity on a bandwidth grid.
        for i in 1..50 {
            let b = i as f64 * 1e5;
            let f = |bw: f64| uplink_rate(bw, 0.2, 1e-9, n0);
            assert!(f(b + 5e4) >= 0.5 * (f(b) + f(b + 1e5)) - 1e-6);
        }
    }
}
