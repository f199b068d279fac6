//! Parameter sweeps: train the same variant/seed set while varying one
//! environment knob, and collect the final-window energy per point.

use std::fs;
use std::path::Path;

use crate::env::EnvConfig;
use crate::mappo::{TrainConfig, Variant};

use super::experiment::{run_experiment_with, ExperimentError};
use super::metrics::mean_std;

/// The environment knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NumMus,
    NumUavs,
    TotalBandwidth,
    WeightFactor,
    DeviationRate,
    FMaxLocal,
    FMaxEdge,
    TaskBits,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "num-mus" => Self::NumMus,
            "num-uavs" => Self::NumUavs,
            "bandwidth" => Self::TotalBandwidth,
            "weight-factor" => Self::WeightFactor,
            "deviation" => Self::DeviationRate,
            "f-max-local" => Self::FMaxLocal,
            "f-max-edge" => Self::FMaxEdge,
            "task-bits" => Self::TaskBits,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::NumMus => "num-mus",
            Self::NumUavs => "num-uavs",
            Self::TotalBandwidth => "bandwidth",
            Self::WeightFactor => "weight-factor",
            Self::DeviationRate => "deviation",
            Self::FMaxLocal => "f-max-local",
            Self::FMaxEdge => "f-max-edge",
            Self::TaskBits => "task-bits",
        }
    }

    /// Return a copy of `base` with this knob set to `value`.
    pub fn apply(self, base: &EnvConfig, value: f64) -> EnvConfig {
        let mut env = base.clone();
        match self {
            Self::NumMus => env.num_mus = value as usize,
            Self::NumUavs => env.num_uavs = value as usize,
            Self::TotalBandwidth => env.channel.total_bandwidth = value,
            Self::WeightFactor => env.weight_factor = value,
            Self::DeviationRate => {
                env.deviation.enabled = value > 0.0;
                env.deviation.freq_rate = value;
                env.deviation.loc_rate = value;
            }
            Self::FMaxLocal => env.f_max_local = value,
            Self::FMaxEdge => env.f_max_edge = value,
            Self::TaskBits => {
                // Scale both ends, preserving the range shape.
                let ratio = base.tasks.bits_max / base.tasks.bits_min;
                env.tasks.bits_min = value / ratio;
                env.tasks.bits_max = value;
            }
        }
        env
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub seed: u64,
    pub weighted_energy: f64,
    pub jain_index: f64,
}

/// Train every (point, seed) combination and write one `sweep.csv` row per
/// run plus a per-point aggregate block at the end.
pub fn run_sweep(
    base_env: &EnvConfig,
    train: TrainConfig,
    variant: Variant,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    fs::create_dir_all(out_dir)?;
    let mut points = Vec::new();
    let mut csv = String::from("axis,value,seed,weighted_energy_final,jain_final\n");
    for &value in values {
        let env = axis.apply(base_env, value);
        env.validate().map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string())
        })?;
        let point_dir = out_dir.join(format!("{}-{}", axis.name(), value));
        for &seed in seeds {
            let arts =
                run_experiment_with(env.clone(), train, variant, seed, &point_dir, None)?;
            let p = SweepPoint {
                value,
                seed,
                weighted_energy: arts.summary.final_weighted_energy_mean,
                jain_index: arts.summary.final_jain_mean,
            };
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                axis.name(),
                value,
                seed,
                p.weighted_energy,
                p.jain_index
            ));
            points.push(p);
        }
    }
    // Aggregate block: one row per swept value, mean over seeds.
    csv.push_str("# aggregate: value,energy_mean,energy_std\n");
    for &value in values {
        let e: Vec<f64> = points
            .iter()
            .filter(|p| p.value == value)
            .map(|p| p.weighted_energy)
            .collect();
        let (m, s) = mean_std(&e);
        csv.push_str(&format!("# {value},{m},{s}\n"));
    }
    fs::write(out_dir.join("sweep.csv"), csv)?;
    Ok(points)
}
