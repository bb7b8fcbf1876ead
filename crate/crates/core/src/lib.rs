//! Numerical building blocks for the Calderon inverse conductivity problem in
//! three dimensions: discrete domains and fields, forward Dirichlet solvers and
//! Dirichlet-to-Neumann maps, Faddeev Green's operators, complex geometrical
//! optics solutions, the boundary-integral reconstruction pipeline and the
//! log-stability experiment.

pub mod boundary;
pub mod calculus;
pub mod cgo;
pub mod domain;
pub mod error;
pub mod faddeev;
pub mod fft;
pub mod field;
pub mod forward;
pub mod frequency;
pub mod grid;
pub mod parallel;
pub mod phantom;
pub mod recon;
pub mod stability;

pub use boundary::{boundary_pairing, BoundaryFunction};
pub use domain::{Domain, DomainShape};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use frequency::{ComplexFrequency, LatticeFrequency};
pub use grid::Grid;
pub use num_complex::Complex64;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
