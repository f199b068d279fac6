//! Text checkpoints with exact f64 round-tripping (values are stored as hex
//! bit patterns). A checkpoint carries the four networks, their optimizer
//! moments and the next episode index, which is everything needed to resume
//! a run bit-for-bit: all randomness is re-derived from (seed, episode, slot,
//! entity) addresses.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::neuro::params::{flatten_params, ParamSet};
use crate::neuro::Adam;

use super::trainer::Trainer;

const MAGIC: &str = "aeromec-checkpoint v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad header)")]
    BadHeader,
    #[error("malformed checkpoint near `{0}`")]
    Malformed(String),
    #[error("checkpoint is for variant `{found}`, trainer is `{expected}`")]
    VariantMismatch { found: String, expected: String },
}

fn push_tensor(out: &mut String, name: &str, values: &[f64]) {
    writeln!(out, "tensor {name} {}", values.len()).unwrap();
    for v in values {
        writeln!(out, "{:016x}", v.to_bits()).unwrap();
    }
}

fn push_adam(out: &mut String, name: &str, opt: &Adam) {
    let (t, m, v) = opt.state();
    writeln!(out, "adam {name} {t} {}", m.len()).unwrap();
    for (mi, vi) in m.iter().zip(v) {
        writeln!(out, "{:016x} {:016x}", mi.to_bits(), vi.to_bits()).unwrap();
    }
}

pub fn save(trainer: &mut Trainer, path: &Path) -> Result<(), CheckpointError> {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "variant {}", trainer.variant.name()).unwrap();
    writeln!(out, "episode {}", trainer.next_episode).unwrap();
    push_tensor(&mut out, "actor_mu", &flatten_params(&mut trainer.actor_mu));
    push_tensor(&mut out, "actor_uav", &flatten_params(&mut trainer.actor_uav));
    push_tensor(&mut out, "critic_mu", &flatten_params(&mut trainer.critic_mu));
    push_tensor(&mut out, "critic_uav", &flatten_params(&mut trainer.critic_uav));
    push_adam(&mut out, "actor_mu", &trainer.opt_actor_mu);
    push_adam(&mut out, "actor_uav", &trainer.opt_actor_uav);
    push_adam(&mut out, "critic_mu", &trainer.opt_critic_mu);
    push_adam(&mut out, "critic_uav", &trainer.opt_critic_uav);
    fs::write(path, out)?;
    Ok(())
}

fn parse_f64(tok: &str) -> Result<f64, CheckpointError> {
    u64::from_str_radix(tok, 16)
        .map(f64::from_bits)
        .map_err(|_| CheckpointError::Malformed(tok.to_string()))
}

pub fn load(trainer: &mut Trainer, path: &Path) -> Result<(), CheckpointError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CheckpointError::BadHeader);
    }
    let mut tensors: Vec<(String, Vec<f64>)> = Vec::new();
    let mut adams: Vec<(String, u64, Vec<f64>, Vec<f64>)> = Vec::new();
    while let Some(line) = lines.next() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("variant") => {
                let found = parts.next().unwrap_or_default().to_string();
                if found != trainer.variant.name() {
                    return Err(CheckpointError::VariantMismatch {
                        found,
                        expected: trainer.variant.name().to_string(),
                    });
                }
            }
            Some("episode") => {
                trainer.next_episode = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?;
            }
            Some("tensor") => {
                let name = parts
                    .next()
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?
                    .to_string();
                let len: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?;
                let mut vals = Vec::with_capacity(len);
                for _ in 0..len {
                    let row = lines
                        .next()
                        .ok_or_else(|| CheckpointError::Malformed(name.clone()))?;
                    vals.push(parse_f64(row.trim())?);
                }
                tensors.push((name, vals));
            }
            Some("adam") => {
                let name = parts
                    .next()
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?
                    .to_string();
                let t: u64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?;
                let len: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CheckpointError::Malformed(line.to_string()))?;
                let mut m = Vec::with_capacity(len);
                let mut v = Vec::with_capacity(len);
                for _ in 0..len {
                    let row = lines
                        .next()
                        .ok_or_else(|| CheckpointError::Malformed(name.clone()))?;
                    let mut toks = row.split_whitespace();
                    m.push(parse_f64(
                        toks.next().ok_or_else(|| CheckpointError::Malformed(row.to_string()))?,
                    )?);
                    v.push(parse_f64(
                        toks.next().ok_or_else(|| CheckpointError::Malformed(row.to_string()))?,
                    )?);
                }
                adams.push((name, t, m, v));
            }
            Some(other) => return Err(CheckpointError::Malformed(other.to_string())),
            None => {}
        }
    }
    for (name, vals) in tensors {
        let net: &mut dyn ParamSet = match name.as_str() {
            "actor_mu" => &mut trainer.actor_mu,
            "actor_uav" => &mut trainer.actor_uav,
            "critic_mu" => &mut trainer.critic_mu,
            "critic_uav" => &mut trainer.critic_uav,
            _ => return Err(CheckpointError::Malformed(name)),
        };
        load_dyn(net, &vals);
    }
    for (name, t, m, v) in adams {
        let opt = match name.as_str() {
            "actor_mu" => &mut trainer.opt_actor_mu,
            "actor_uav" => &mut trainer.opt_actor_uav,
            "critic_mu" => &mut trainer.opt_critic_mu,
            "critic_uav" => &mut trainer.opt_critic_uav,
            _ => return Err(CheckpointError::Malformed(name)),
        };
        opt.restore(t, m, v);
    }
    Ok(())
}

/// `neuro::params::load_params` is generic; this is its dyn-object twin.
fn load_dyn(net: &mut dyn ParamSet, flat: &[f64]) {
    let mut at = 0;
    net.visit(&mut |p, _| {
        p.copy_from_slice(&flat[at..at + p.len()]);
        at += p.len();
    });
    assert_eq!(at, flat.len(), "parameter count mismatch");
}
