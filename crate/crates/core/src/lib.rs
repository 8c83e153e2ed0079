//! Curvature flow of planar networks with triple junctions, and numerical
//! diagnostics for Brakke flows near a triple junction.

pub mod diagnostics;
pub mod error;
pub mod excess;
pub mod flowsim;
pub mod io;
pub mod monotone;
pub mod netgeom;
pub mod varifold;

pub use error::{Error, Result};
