//! Learning-from-demonstration core for an arm-equipped tracked robot.
//!
//! Everything here is `no_std` + `alloc`: the action vocabulary, sensor
//! conditioning, the corridor simulator, demonstration editing and
//! windowing, the LSTM classifier with its trainer, and the closed-loop
//! controller. File formats, the CLI, and the teleoperation service live in
//! the `trackbc` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod controller;
pub mod courses;
pub mod demo;
pub mod domain;
pub mod error;
pub mod net;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};
