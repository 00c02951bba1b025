//! Random-matrix ensembles for PT-symmetric coupled systems.

pub mod ensembles;
pub mod pastur;
pub mod error;
pub mod experiments;
pub mod seed;
pub mod spectral;

pub use error::{Error, Result};
pub use faer::c64;
