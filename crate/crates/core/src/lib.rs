//! Numerical core for designing planar (surface-electrode) ion traps.
//!
//! Everything here is deterministic and `no_std` (with
//! `alloc`). All quantities are strict SI internally: lengths in metres,
//! frequencies in rad/s, and so on. Unit conversion for
//! human-facing input and output happens in the `trapforge` front end.
//!
//! The crate is organised bottom-up:
//!
//! * [`electrostatics`]: closed-form unit-voltage potentials of strip and
//!   rectangular electrodes in a grounded plane, and their composition into
//!   the rf pseudopotential and the static potential.
//! * [`layout`]: the two segmented five-wire trap designs.
//! * [`geometry`]: where the rf node sits and how deep the trap is, plus
//!   the optimisation of the depth geometric factor.
//! * [`axial`]: the quartic expansion of the axial potential and what it
//!   implies for segment widths.
//! * [`shuttling`]: two-ion separation dynamics with the motional quanta
//!   they cost.
//! * [`constraints`]: whether an operating point fits the chip's electrical
//!   limits.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod axial;
pub mod constraints;
pub mod electrostatics;
mod error;
pub mod geometry;
pub mod layout;
mod math;
pub mod optimize;
pub mod shuttling;
pub mod units;

pub use error::{Error, Result};

/// Cartesian point or vector, ordered `(x, y, z)`: `x` across the rf rails,
/// `y` the height above the electrode plane and `z` along the trap axis.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Symmetric 3x3 matrix of second derivatives in the same ordering as [`Vec3`].
pub type Mat3 = nalgebra::Matrix3<f64>;
