//! TOML run configuration. Every section and field is optional; omitted
//! values fall back to the published defaults (or the desk profile when
//! `base = "desk"`). Unknown keys are rejected so typos fail loudly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dt::DeviationModel;
use crate::env::EnvConfig;
use crate::mappo::{TrainConfig, Variant};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error(transparent)]
    Env(#[from] crate::env::ConfigError),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// "paper" (default) or "desk".
    pub base: Option<String>,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub deviation: DeviationSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub num_mus: Option<usize>,
    pub num_uavs: Option<usize>,
    pub region_width: Option<f64>,
    pub uav_altitude: Option<f64>,
    pub slot_duration: Option<f64>,
    pub slots_per_period: Option<usize>,
    pub total_bandwidth: Option<f64>,
    pub relay_bandwidth: Option<f64>,
    pub mu_tx_power: Option<f64>,
    pub uav_tx_power: Option<f64>,
    pub f_max_local: Option<f64>,
    pub f_max_edge: Option<f64>,
    pub task_bits_min: Option<f64>,
    pub task_bits_max: Option<f64>,
    pub weight_factor: Option<f64>,
    pub d_th: Option<f64>,
    pub d_min: Option<f64>,
    pub v_max: Option<f64>,
    pub a_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationSection {
    pub enabled: Option<bool>,
    pub freq_rate: Option<f64>,
    pub loc_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub episodes: Option<usize>,
    pub lr: Option<f64>,
    pub clip: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub gamma_mu: Option<f64>,
    pub gamma_uav: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub ppo_epochs: Option<usize>,
    pub max_grad_norm: Option<f64>,
    pub hidden: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Option<Vec<u64>>,
    pub variant: Option<String>,
    pub out_dir: Option<PathBuf>,
}

/// A fully resolved run: environment, training hyperparameters, seeds.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub env: EnvConfig,
    pub train: TrainConfig,
    #[serde(skip)]
    pub variant: Variant,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Resolved, ConfigFileError> {
    let text = fs::read_to_string(path)?;
    let file: FileConfig = toml::from_str(&text)?;
    resolve(file)
}

pub fn resolve(file: FileConfig) -> Result<Resolved, ConfigFileError> {
    let mut env = match file.base.as_deref() {
        None | Some("paper") => EnvConfig::default(),
        Some("desk") => EnvConfig::desk_profile(),
        Some(other) => {
            return Err(ConfigFileError::Invalid(format!(
                "base must be \"paper\" or \"desk\", got \"{other}\""
            )))
        }
    };
    let e = &file.env;
    macro_rules! set {
        ($field:expr, $opt:expr) => {
            if let Some(v) = $opt {
                $field = v;
            }
        };
    }
    set!(env.num_mus, e.num_mus);
    set!(env.num_uavs, e.num_uavs);
    set!(env.region_width, e.region_width);
    set!(env.uav_altitude, e.uav_altitude);
    set!(env.slot_duration, e.slot_duration);
    set!(env.slots_per_period, e.slots_per_period);
    set!(env.channel.total_bandwidth, e.total_bandwidth);
    set!(env.channel.relay_bandwidth, e.relay_bandwidth);
    set!(env.mu_tx_power, e.mu_tx_power);
    set!(env.uav_tx_power, e.uav_tx_power);
    set!(env.f_max_local, e.f_max_local);
    set!(env.f_max_edge, e.f_max_edge);
    set!(env.tasks.bits_min, e.task_bits_min);
    set!(env.tasks.bits_max, e.task_bits_max);
    set!(env.weight_factor, e.weight_factor);
    set!(env.d_th, e.d_th);
    set!(env.d_min, e.d_min);
    set!(env.v_max, e.v_max);
    set!(env.a_max, e.a_max);

    let d = &file.deviation;
    if d.enabled.is_some() || d.freq_rate.is_some() || d.loc_rate.is_some() {
        let freq_rate = d.freq_rate.unwrap_or(0.0);
        let loc_rate = d.loc_rate.unwrap_or(0.0);
        env.deviation = DeviationModel {
            enabled: d.enabled.unwrap_or(freq_rate > 0.0 || loc_rate > 0.0),
            freq_rate,
            loc_rate,
            perturb_own_position: false,
        };
    }
    env.validate()?;

    let mut train = TrainConfig::default();
    let t = &file.train;
    set!(train.episodes, t.episodes);
    set!(train.lr, t.lr);
    set!(train.clip, t.clip);
    set!(train.entropy_coef, t.entropy_coef);
    set!(train.gamma_mu, t.gamma_mu);
    set!(train.gamma_uav, t.gamma_uav);
    set!(train.gae_lambda, t.gae_lambda);
    set!(train.ppo_epochs, t.ppo_epochs);
    set!(train.max_grad_norm, t.max_grad_norm);
    set!(train.hidden, t.hidden);

    let variant_name = file.run.variant.as_deref().unwrap_or("ab-mappo");
    let variant = Variant::parse(variant_name).ok_or_else(|| {
        ConfigFileError::Invalid(format!(
            "unknown variant \"{variant_name}\" (expected ab-mappo, b-mappo, ag-mappo or random)"
        ))
    })?;

    Ok(Resolved {
        env,
        train,
        variant,
        seeds: file.run.seeds.unwrap_or_else(|| vec![1]),
        out_dir: file.run.out_dir.unwrap_or_else(|| PathBuf::from("runs")),
    })
}

/// Serialized view of the fully resolved configuration, for run manifests.
pub fn echo(resolved: &Resolved) -> String {
    let body = toml::to_string_pretty(resolved).expect("resolved config serializes");
    format!("# resolved configuration (variant = {})\n{body}", resolved.variant.name())
}
