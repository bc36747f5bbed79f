//! Core library for studying first-exit times of monotone change detection
//! statistics by Monte Carlo simulation and grid-based numerical analysis.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`model`]: observation models, their log likelihood ratios, and the
//!   information-theoretic constants attached to them,
//! - [`statistic`]: the detection statistic recursions and a driver that
//!   runs a statistic from an initial state until it first exceeds a
//!   threshold,
//! - [`mc`]: a reproducible Monte Carlo engine for exit-time experiments,
//! - [`qsd`]: grid discretization of the pre-change transition kernel,
//!   quasi-stationary and stationary distributions, and tail diagnostics,
//! - [`approx`]: closed-form average run length approximations and renewal
//!   constants,
//! - [`diagnostics`]: distributional diagnostics (KS distance, QQ data,
//!   survival curves, empirical moment generating functions).
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std`
//! feature routes float math through the standard library instead of
//! `libm` and is what downstream binaries should use.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod approx;
pub mod diagnostics;
mod error;
mod math;
pub mod mc;
pub mod model;
pub mod qsd;
pub mod rng;
pub mod statistic;

pub use error::{Error, Result};
