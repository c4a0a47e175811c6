//! Time-slotted edge task-offloading simulator with per-station learned
//! schedulers (latent diffusion SAC, fresh-noise diffusion SAC, discrete SAC,
//! DQN) and a per-task delay oracle.

pub mod baselines;
pub mod diffusion;
pub mod error;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod sac;
pub mod sim;

pub use error::{Error, Result};
