//! Multi-UAV mobile-edge-computing simulator with a digital-twin layer and
//! multi-agent PPO training on top of it.

pub mod dt;
pub mod env;
pub mod harness;
pub mod mappo;
pub mod neuro;
pub mod physics;
pub mod rng;
pub mod tasking;

pub use env::{Env, EnvConfig, MuAction, StepReport, UavAction};
pub use physics::Vec3;
