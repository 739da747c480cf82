//! Indoor tracking from time-reversal resonating strength (TRRS).
//!
//! The pipeline runs from synthetic multipath channels through TRRS, speed and
//! distance estimation, gyro heading fusion and floorplan-aware dead reckoning.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod channel;
pub mod distance;
pub mod error;
pub mod experiment;
pub mod floorplan;
pub mod geometry;
pub mod heading;
pub mod synth;
pub mod trace;
pub mod tracker;
pub mod trrs;

pub use error::{Error, Result};
