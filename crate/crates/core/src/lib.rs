//! Modified Bessel function of the second kind and the Matérn-covariance
//! Gaussian-process tooling built on it.

pub mod bound;
pub mod covariance;
pub mod error;
pub mod gp;
pub mod oracle;
pub mod special;

pub use error::{Error, Result};
