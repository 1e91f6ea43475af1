//! Tethered dual-rotor autogyro: rotor aerodynamics, tether statics, planar
//! and multibody dynamics, trim sweeps, adaptive altitude estimation and
//! braking-torque control.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aero;
pub mod config;
pub mod controller;
pub mod error;
pub mod estimator;
pub mod plant;
pub mod sim;
pub mod tether;
pub mod trim;
pub mod wind;

pub use error::{Error, Result};
