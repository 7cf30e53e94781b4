pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod grid;
pub mod potentials;
pub mod propagator;
pub mod scenario;
pub mod spectral;
pub mod thermal;

pub use error::{Error, Result};
