//! Link-level simulation of multiuser massive MIMO uplinks.
//!
//! Channel generation for co-located and distributed antenna arrays, the QPSK
//! transmit chain with convolutional coding, hard-decision and iterative
//! receivers, adaptive channel and filter estimation, and a Monte Carlo harness.

pub mod detectors;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod idd;
pub mod linalg;
pub mod rng;
pub mod sysmodel;
pub mod txchain;

pub use error::{Error, Result};
pub use harness::{ScenarioSpec, SweepResult};
pub use linalg::{CMat, CVec, C64};
pub use sysmodel::{Architecture, SystemConfig};
