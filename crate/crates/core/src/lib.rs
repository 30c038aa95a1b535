//! Numerical laboratory for the geometry of Kähler potentials on the flat
//! 2-torus: Monge-Ampère measures, Mabuchi parallel transport, ε-geodesics,
//! rearrangement-invariant convex Lagrangians, and their action functionals.

pub mod action;
pub mod error;
pub mod fixtures;
pub mod geodesic;
pub mod grid;
pub mod lagrangian;
mod linalg;
pub mod rearrangement;
mod spectral;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{DerivativeScheme, Grid, GridField, Potential, WeightedValues};
pub use lagrangian::LagrangianSpec;
pub use rearrangement::StepFunction;
pub use transport::PotentialPath;
