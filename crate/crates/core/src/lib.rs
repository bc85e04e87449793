//! Estimation of sparse observed interactions in linear stochastic systems
//! driven partly by unobserved (latent) components.

pub mod error;
pub mod evaluate;
pub mod generate;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod simulate;
pub mod solver;

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

pub use error::{Error, Result};
