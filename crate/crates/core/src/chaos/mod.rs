//! A finite-dimensional stand-in for the Kondratiev distribution space:
//! chaos expansions over a grid basis of `U`, with Wick product,
//! S-transform, the fractional noise and the Wick exponential.

mod basis;
mod element;
mod multi_index;
mod norm;
pub mod text;

pub use basis::Basis;
pub use element::{fractional_levy_element, noise_element, wick_exp, ChaosElement, TestFunction};
pub use multi_index::MultiIndex;
pub use norm::{distribution_norm, grid_proxy_norm, NormMode, NormReport};
