//! Non-spherical constant Q-curvature metrics on R³.
//!
//! A zonal variational problem on S³ is solved spectrally, pulled back to
//! R³ by stereographic projection and checked against the integral,
//! volume and Pohozaev identities that such a solution must satisfy.

pub mod cli;
pub mod config;
pub mod error;
pub mod euclidean;
pub mod minimizer;
pub mod solution;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
