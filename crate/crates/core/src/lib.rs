//! Emulator for graph states prepared with always-on van der Waals
//! interactions between Rydberg atoms, with the measurement-based order
//! parameters, noise channels, readout mitigation and scaling fits used to
//! benchmark them.

pub mod cli;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod mbqc;
pub mod mitigation;
pub mod noise;
pub mod observables;
pub mod pulses;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
