//! Spectral computations for Schrodinger operators `-D² + q` on metric
//! Cayley graphs of free groups.
//!
//! Multipliers `μ_m(λ)` describe the decay of the `L²` solution across an
//! edge of type `m`. From them we build the resolvent kernel, locate bands
//! on `[0, ∞)` through the reality of the boundary values, and cross-check
//! everything against a finite-difference model of a truncated tree.

pub mod error;
pub mod graph;
pub mod multiplier;
pub mod oracle;
pub mod resolvent;
pub mod spectrum;
pub mod sturm;

pub use error::{Error, Result};
pub use graph::{CayleyConfig, EdgeSpec, Letter, PotentialSpec, RationalLength, Word};
pub use sturm::FundamentalPair;
pub use multiplier::{solve_multipliers, MultiplierSet, MultiplierSource, ToleranceConfig};
pub use resolvent::{apply_resolvent, EdgeLoad, TreeFunction};
pub use spectrum::{Band, Classification, SpectralSample};
