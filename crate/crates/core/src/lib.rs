//! Numerical laboratory for matrix-weighted estimates of Riesz-transform
//! squares, Littlewood–Paley functionals and dyadic martingale transforms.

pub mod bellman_probe;
pub mod dyadic_mart;
pub mod error;
pub mod grid;
pub mod harness;
pub mod heat_ext;
pub mod lp_functional;
pub mod matlin;
pub mod riesz_ops;
pub mod seeds;
pub mod weight_field;

pub use error::{Error, Result};
