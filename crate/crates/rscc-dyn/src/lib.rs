//! Random polynomial dynamics driven by systems with complete connections.
//!
//! A random system with complete connections (RSCC) selects, at every step, an
//! index according to a state-dependent law and updates the state; here each
//! index carries a finitely supported measure on non-constant polynomials, so
//! paths of the system act on the Riemann sphere. This crate estimates the
//! probability that an orbit tends to infinity (statewise and averaged against
//! stationary distributions of the state chain), computes smallest filled-in
//! Julia sets by admissible-word search, and iterates the transition operator
//! on a product grid to its escape fixed point.
//!
//! The `parallel` feature (on by default) runs grid sweeps on rayon; results
//! are identical at any thread count because every cell draws from a stream
//! derived from `(master_seed, cell, replicate)`.

pub mod config;
pub mod error;
pub mod escape;
pub mod models;
pub mod operator;
pub mod output;
pub mod poly;
pub mod rscc;
pub mod sphere;
pub mod stationary;
pub mod stream;
pub mod verify;

mod exec;

pub use error::Error;
pub use escape::{EscapeEstimate, EscapeParams, TriState, ZGrid};
pub use poly::{escape_radius, Polynomial};
pub use rscc::{FiniteMeasureOnPoly, PathSample, RsccModel, State, StateSpace, WGrid};
pub use sphere::{spherical_distance, ExtendedComplex};

pub type Complex64 = num_complex::Complex64;
