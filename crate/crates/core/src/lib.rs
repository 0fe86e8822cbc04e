//! Virtual two-photon multiport lab built on a random-unitary multimode
//! fiber: transmission matrix measurement, two-photon transfer matrices,
//! and phase-only SLM inverse design.

pub mod control;
pub mod error;
pub mod expcli;
pub mod numcore;
pub mod tmrecon;
pub mod ttm;
pub mod virtlab;

pub use error::{Error, Result};
