//! Simulation of grid-based piezoresistive tactile sensors in contact with
//! rigid objects.
//!
//! The pipeline mirrors what a tactile-equipped gripper observes:
//!
//! - [`geometry`]: meshes and signed distance fields of contact objects.
//! - [`sensor_pad`]: taxel lattices sampled on pad meshes and their rigid motion.
//! - [`contact`]: Kelvin–Voigt penalty forces per taxel, packed into tactile frames.
//! - [`signal`]: reading normalization and contact parameter calibration.
//! - [`perception`]: camera point clouds merged with taxel readings.
//! - [`sim`]: scene loading and deterministic batch-parallel trajectory replay.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod geometry;
pub mod io_util;
pub mod perception;
pub mod sensor_pad;
pub mod signal;
pub mod sim;
