//! Whole-hand vibration sensing toolkit.
//!
//! A 42-sensor accelerometer array on the back of the hand, emulated end to
//! end: the acquisition wire format, orientation-invariant scalar channels,
//! gesture similarity, geodesic distances on a hand surface, distance-weighted
//! reconstruction of the whole-hand wave field, and a damped traveling-wave
//! simulator that produces ground truth for all of it.

pub mod anatomy;
pub mod geometry;
pub mod recon;
pub mod signal;
pub mod sim;
pub mod types;
pub mod wire;

pub use anatomy::{default_config, HandModel, Region};
pub use types::*;
