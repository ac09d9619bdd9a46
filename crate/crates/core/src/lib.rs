//! Numerical laboratory for quantum dynamics in hydrodynamic form.
//!
//! The crate evolves a probability density P and action S side by side
//! with the equivalent wave function, computes the momentum/energy
//! fluctuation fields and uncertainty functionals attached to P, samples
//! deterministic and stochastic trajectories, and classifies probability
//! transport as divergence-free Hamiltonian flow or not.
//!
//! Everything lives on uniform periodic grids ([`Grid`]) with spectral
//! differentiation as the primary scheme and centered finite differences
//! as an independent cross-check.

pub mod constants;
pub mod error;
pub mod field;
pub mod fields;
pub mod fluctuations;
pub mod grid;
pub mod io;
pub mod kleingordon;
pub mod madelung;
pub mod ops;
pub mod rng;
pub mod scenario;
pub mod schrodinger;
pub mod trajectories;
pub mod uncertainty;

pub use constants::{PhysicalConstants, ALPHA};
pub use error::{Error, Result};
pub use field::{Mask, ScalarFieldComplex, ScalarFieldReal, VectorFieldReal};
pub use fields::{ActionField, DensityField, MadelungPair, WaveFunction};
pub use grid::Grid;
pub use schrodinger::{EvolutionResult, Potential};
