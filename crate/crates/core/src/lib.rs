//! Decoder-free error-correction thresholds for neutral-atom toric codes.
//!
//! The crate runs the whole chain from laser pulse to threshold:
//!
//! * [`pulse`] and [`channel`] propagate a Rydberg entangling pulse with
//!   spontaneous decay and leakage, and twirl the result into a Pauli channel;
//! * [`plaquette`] turns that into a correlated error distribution for one
//!   stabiliser measurement;
//! * [`disorder`] and [`nishimori`] map the distribution onto quenched
//!   disorder and the matching temperature of the dual statistical models;
//! * [`rbim`], [`rpgm`] and [`percolation`] locate the order/disorder
//!   transitions of those models;
//! * [`pipeline`] sweeps the noise parameters into a phase diagram and a
//!   logical lifetime estimate.
//!
//! The `qec-thresholds` binary exposes each stage on the command line.

pub mod channel;
pub mod cli;
pub mod disorder;
pub mod erasure;
pub mod error;
pub mod fss;
pub mod io;
pub mod nishimori;
pub mod pauli;
pub mod percolation;
pub mod pipeline;
pub mod plaquette;
pub mod pulse;
pub mod rbim;
pub mod rng;
pub mod rpgm;
pub mod stats;

pub use error::{Error, Result};
