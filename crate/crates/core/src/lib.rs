//! Golden space-time trellis coded modulation (GST-TCM) over 2x2 MIMO block
//! fading channels: code construction, lattice decoding, Monte Carlo frame
//! error simulation and error-event based performance analysis.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod golden;
pub mod lattice;
pub mod montecarlo;
pub mod rng;
pub mod trellis;
pub mod verify;

pub use error::{Error, Result};
