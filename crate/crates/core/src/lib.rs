//! Pseudo-spectral simulation of the 2D Euler-Boussinesq system with
//! fractional dissipation `|D|^alpha`, together with a Littlewood-Paley
//! toolkit (dyadic blocks, Besov norms, paraproducts, commutators) used to
//! check harmonic-analysis estimates numerically on synthetic ensembles and
//! on live trajectories.
//!
//! The physical domain is the periodic torus `[0, period)^2`.

pub mod boussinesq;
pub mod ensemble;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
mod integrator;
pub mod io;
pub mod lp;
pub mod paradiff;
pub mod spectral;
pub mod tdsolver;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, SpectralField, VectorField};
pub use grid::Grid;
pub use lp::{BesovIndex, BlockHistory, DyadicPartition};
pub use spectral::Axis;
