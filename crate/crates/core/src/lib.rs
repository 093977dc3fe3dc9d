//! Robust satellite downlink beamforming under a terrestrial interference
//! threshold.
//!
//! The crate models a LEO satellite with a uniform planar array serving
//! `K_S` single-antenna users from statistical CSI while keeping the average
//! interference received by nearby terrestrial users below a threshold. It
//! provides the interference covariance (integral and base-station
//! approximation), baseline precoders, three interference-aware designs and
//! Monte Carlo evaluation.

pub mod baseline;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod interference;
pub mod linalg;
pub mod numerics;
pub mod problem;
pub mod robust;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use rng::SimRng;
