//! Signal-integrity analysis of differential printed-wiring-board nets.
//!
//! The crate is `no_std` with `alloc`; file formats, the command line and
//! parallel execution live in the companion `pwbsi` crate.

#![no_std]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod fft;
pub mod linksim;
pub mod metrics;
pub mod network;
pub mod outcome;
pub mod record;
pub mod spectrum;
pub mod stats;
pub mod synth;
pub mod tdr;

pub use num_complex::Complex64;
