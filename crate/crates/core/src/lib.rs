//! Numerical toolkit for the global planar obstacle problem and its free boundary.
//!
//! The crate solves `min { -Δu, u - h } = 0` on a truncated box with far-field
//! matching, extracts the free boundary, and computes the first- and
//! second-order response of the boundary to perturbations of the obstacle
//! (normal velocity and normal acceleration), together with the layer-potential
//! machinery those laws are built on.

pub mod curve;
pub mod error;
pub mod frame;
pub mod grid;
pub mod io;
pub mod layerpot;
pub mod obstacle;
pub mod perturb;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
