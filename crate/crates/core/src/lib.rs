//! Switch-DDQ: Dyna-Q dialogue policy learning with a learned world model,
//! an LSTM quality gate for simulated experience, and active user-goal
//! sampling, together with the DQN/DDQ baselines and a benchmark harness.

pub mod agent;
pub mod domain;
pub mod error;
pub mod config;
pub mod nn;
pub mod pipeline;
pub mod sampler;
pub mod stats;
pub mod switcher;
pub mod world;

pub use error::{Error, Result};
