//! Simulation of adaptive distributed transmit beamforming.
//!
//! A set of transmitters adjusts their carrier phases so their signals add
//! coherently at a receiver that can only measure the received signal
//! strength (RSS) and send short feedback messages back. This crate holds
//! the channel model, the algorithms, brute-force reference solvers, and a
//! Monte Carlo harness that writes traces, summaries and SVG plots.

pub mod algorithms;
pub mod channel;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracle;

pub use error::{Error, Result};
