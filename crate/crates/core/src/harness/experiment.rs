//! One experiment = one (config, variant, seed) training run with all its
//! artifacts: resolved-config echo, per-episode metrics, wall-clock timings,
//! a checkpoint, a greedy evaluation trace and a summary digest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvConfig;
use crate::mappo::{checkpoint, EpisodeStats, TrainConfig, Trainer, Variant};

use super::config_file::{echo, Resolved};
use super::metrics::{self, mean_std, MetricsError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] crate::mappo::checkpoint::CheckpointError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Digest of a finished run, written as `summary.json`. Final-window values
/// aggregate the last 10% of training episodes, re-read from the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub variant: String,
    pub seed: u64,
    pub episodes: usize,
    pub final_weighted_energy_mean: f64,
    pub final_weighted_energy_std: f64,
    pub final_mu_reward_mean: f64,
    pub final_uav_reward_mean: f64,
    pub final_jain_mean: f64,
    pub eval_weighted_energy: f64,
    pub eval_jain: f64,
    pub eval_penalty_total: f64,
}

pub struct RunArtifacts {
    pub dir: PathBuf,
    pub stats: Vec<EpisodeStats>,
    pub eval: EpisodeStats,
    pub summary: Summary,
}

pub fn run_dir(out_dir: &Path, variant: Variant, seed: u64) -> PathBuf {
    out_dir.join(format!("{}-seed{}", variant.name(), seed))
}

/// Train one seed to completion and write every artifact under
/// `<out_dir>/<variant>-seed<seed>/`.
pub fn run_experiment(
    resolved: &Resolved,
    seed: u64,
) -> Result<RunArtifacts, ExperimentError> {
    run_experiment_with(
        resolved.env.clone(),
        resolved.train,
        resolved.variant,
        seed,
        &resolved.out_dir,
        Some(&echo(resolved)),
    )
}

pub fn run_experiment_with(
    env: EnvConfig,
    train: TrainConfig,
    variant: Variant,
    seed: u64,
    out_dir: &Path,
    config_echo: Option<&str>,
) -> Result<RunArtifacts, ExperimentError> {
    let dir = run_dir(out_dir, variant, seed);
    fs::create_dir_all(&dir)?;
    if let Some(text) = config_echo {
        fs::write(dir.join("config.toml"), text)?;
    }

    let mut trainer = Trainer::new(env, train, variant, seed);
    let episodes = train.episodes;
    let mut stats = Vec::with_capacity(episodes);
    let mut timings = String::from("episode,seconds\n");
    for _ in 0..episodes {
        let t0 = Instant::now();
        let s = trainer.run_episode();
        timings.push_str(&format!("{},{:.3}\n", s.episode, t0.elapsed().as_secs_f64()));
        stats.push(s);
    }
    let metrics_path = dir.join("metrics.csv");
    metrics::write_csv(&metrics_path, &stats)?;
    fs::write(dir.join("timing.csv"), timings)?;
    checkpoint::save(&mut trainer, &dir.join("checkpoint.txt"))?;

    // Greedy evaluation on a fresh episode index, with a step-level trace.
    let (eval, reports) = trainer.evaluate_episode(episodes as u64);
    let mut trace = String::new();
    for r in &reports {
        trace.push_str(&serde_json::to_string(r)?);
        trace.push('\n');
    }
    fs::write(dir.join("trace.jsonl"), trace)?;

    // The summary is computed from the persisted log, not the in-memory
    // rows, so it doubles as a round-trip check.
    let logged = metrics::read_csv(&metrics_path)?;
    let window = final_window(&logged);
    let pick = |f: &dyn Fn(&EpisodeStats) -> f64| window.iter().map(|r| f(r)).collect::<Vec<_>>();
    let (we_mean, we_std) = mean_std(&pick(&|r| r.weighted_energy));
    let summary = Summary {
        variant: variant.name().to_string(),
        seed,
        episodes,
        final_weighted_energy_mean: we_mean,
        final_weighted_energy_std: we_std,
        final_mu_reward_mean: mean_std(&pick(&|r| r.mean_mu_reward)).0,
        final_uav_reward_mean: mean_std(&pick(&|r| r.mean_uav_reward)).0,
        final_jain_mean: mean_std(&pick(&|r| r.jain_index)).0,
        eval_weighted_energy: eval.weighted_energy,
        eval_jain: eval.jain_index,
        eval_penalty_total: eval.penalty_total,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;

    Ok(RunArtifacts { dir, stats, eval, summary })
}

/// Last 10% of episodes (at least one).
pub fn final_window(rows: &[EpisodeStats]) -> &[EpisodeStats] {
    let n = rows.len();
    let w = (n / 10).max(1).min(n);
    &rows[n - w..]
}
