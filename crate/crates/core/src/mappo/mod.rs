//! Multi-agent PPO with centralized training and decentralized execution:
//! shared per-type actors with Beta (default) or Gaussian heads, centralized
//! attention or flat critics, GAE, and exact text checkpoints.

pub mod actor;
pub mod checkpoint;
pub mod critic;
pub mod gae;
pub mod trainer;

pub use actor::{ActorNet, HeadKind};
pub use critic::{AgentType, AttnDims, CriticNet, StateBatch};
pub use gae::gae;
pub use trainer::{EpisodeStats, TrainConfig, Trainer, Variant};
