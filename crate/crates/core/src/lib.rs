//! Equilibrium droplet formation in two-phase systems at fixed excess, with
//! a 2D Ising lattice-gas simulator to test it.
//!
//! - [`theory`]: the universal free energy `Φ_Δ(λ)`, `Δ_c`, `λ_c`.
//! - [`thermo`]: exact Ising `m*`, interface tension and the Wulff constant.
//! - [`lattice`]: fixed-magnetization, grandcanonical and multicanonical samplers.
//! - [`contour`]: Peierls contours, their classification and droplet fraction.
//! - [`harness`]: parameter sweeps, aggregation and the rate-function fit.
//! - [`cli`]: the `droplet` command line.

pub mod cli;
pub mod contour;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod theory;
pub mod thermo;

pub use error::{Error, Result};
