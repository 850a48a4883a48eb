//! Effective diffusion of lateral Brownian motion on quasi-planar random
//! surfaces.
//!
//! A surface is the graph of a periodic height field `h` (see [`fields`]).
//! Its metric (see [`geometry`]) drives both the periodic cell problem solved
//! by finite elements in [`cell`] and the Itô diffusion integrated in [`sde`].
//! [`analysis`] checks computed tensors against the structural identities
//! (`det D = 1/Z²`, eigenvalue and Voigt–Reuss bounds) and runs ensembles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cell;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod io;
mod par;
pub mod rng;
pub mod sde;

pub use error::{Error, Result};
