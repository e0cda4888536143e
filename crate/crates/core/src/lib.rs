//! Numerical laboratory for a stochastic chain with two conserved quantities
//! and its superdiffusive-to-diffusive crossover limit.

pub mod chain;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernel;
pub mod levy;
pub mod pde;
pub mod quadform;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod testfn;
pub mod util;

pub use error::{Error, Result};
