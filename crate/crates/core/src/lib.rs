//! Simulation of leveraged stock/bond portfolios: leveraged ETFs and margin,
//! threshold rebalancing, capital gains tax and block-bootstrap Monte-Carlo.

pub mod config;
pub mod engine;
pub mod error;
pub mod market;
pub mod montecarlo;
pub mod report;
pub mod tax;

pub use error::{Error, Result};
