//! Analysis toolkit for a four-compartment tumor / virus / immune ODE model
//! and its three-compartment virus-only reduction.
//!
//! Equilibria come from closed forms and cubic reductions, stability from
//! eigenvalues and Routh–Hurwitz tests, and cycles from shooting plus
//! pseudo-arclength continuation.

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod bifurcation;
pub mod dynamics;
pub mod equilibria;
pub mod export;
pub mod error;
pub mod model;
pub mod poly;
pub mod scalar;
pub mod stability;

pub use equilibria::{Equilibrium, EquilibriumSet, EquilibriumTag, InteriorBranch};
pub use error::{Error, Result};
pub use model::{jacobian, vector_field, Clearance, DomainBounds, ModelParams, Param, State};
pub use poly::{RealPolynomial, RealRoot};
