//! Pseudospectral simulation and diagnostics for the two-dimensional
//! semi-dissipative Boussinesq system on a periodic box.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod spectral;
pub mod dynamics;
pub mod exact;
pub mod diagnostics;
pub mod random;
pub mod io;
pub mod experiments;
pub mod cli;

pub use error::{Error, Result};
pub use spectral::{Axis, Grid, PhysParams, SpectralScalar, SpectralVector};
