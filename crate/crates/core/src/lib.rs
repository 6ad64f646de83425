//! Financial time-series reasoning benchmark: market data handling, task
//! generation and labelling, reasoning-chain rendering, corpus I/O,
//! forecasting baselines and model scoring.

pub mod config;
pub mod corpus;
pub mod cot;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod market;
pub mod math;
pub mod pipeline;
pub mod plot;
pub mod synth;
pub mod task;

pub use error::{Error, MathError, Result};
