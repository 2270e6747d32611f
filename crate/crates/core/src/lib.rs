//! Heterogeneous multiscale computation of Navier-slip wall laws for
//! stationary laminar flow over rough walls.
//!
//! The crate is organised bottom-up: [`geometry`] describes rough walls,
//! [`mesh`] triangulates every domain, [`fem`] solves Navier-Stokes with
//! Taylor-Hood elements, [`cell`] computes the homogenization slip
//! constant, [`micro`] and [`coupling`] implement the macro-micro
//! iteration and [`bench`] drives the experiments.

pub mod bench;
pub mod cell;
pub mod coupling;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod micro;

pub use error::{Error, Result};
