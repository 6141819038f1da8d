//! Dirac operators with smeared Coulomb potentials: free Dirac algebra,
//! radial discretization and diving couplings, projector-pair indices,
//! the Uehling density and kernel trace-norm bounds.

pub mod dirac_algebra;
pub mod error;
pub mod flow;
pub mod kernel;
pub mod lattice;
pub mod nuclear;
pub mod parallel;
pub mod projector;
pub mod quadrature;
pub mod radial;
pub mod random_models;
pub mod tridiag;
pub mod uehling;

pub use error::{Error, Result};
pub use nuclear::ChargeDensity;
