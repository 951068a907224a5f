//! Numerical laboratory for the ABC exchange dynamics on a ring at equal
//! species densities: exact generators and spectral gaps, Gibbs ensembles,
//! kinetic Monte Carlo, free-energy functionals with a periodic-orbit
//! minimizer solver, conservative hydrodynamics, and the perturbed
//! interchange process on the symmetric group that projects onto the
//! complete-graph dynamics.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod functional;
pub mod generator;
pub mod hydro;
pub mod interchange;
pub mod lattice;
pub mod ode;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{Species, SpeciesConfiguration, SPECIES};
