//! Fractional Lévy processes and a finite white-noise calculus around them.

pub mod chaos;
pub mod error;
pub mod frac_ops;
pub mod grid;
pub mod hermite;
pub mod kernels;
pub mod levy;
pub mod paths;
pub mod probe;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod skorohod;
pub mod volterra;

pub use error::{Error, Result};
pub use grid::{GridFunction, TimeGrid};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
