//! Scattering simulation of non-reciprocal microwave ring graphs.
//!
//! A [`Netlist`] of closed-form elements is reduced to its external
//! S-matrix, swept over a frequency grid, and analysed for complex time
//! delays, pole/zero structure, pulse propagation and transmission asymmetry.

pub mod cli;
pub mod delays;
pub mod elements;
pub mod error;
pub mod io;
pub mod metrics;
pub mod netlist;
pub mod pulse;
pub mod pzfit;
pub mod sweep;

pub use elements::{CMatrix, CoaxSpec, ElementKind, LineSpec};
pub use error::{Error, Result};
pub use netlist::{build_ab_ring, GyratorMode, Netlist, PortRef, RingParams, RingVariant};
pub use sweep::{sweep, FrequencyGrid, FrequencySpectrum};
