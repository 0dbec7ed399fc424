//! Finite-element simulation of stochastic reaction-diffusion systems driven
//! by spatially colored Q-Wiener noise.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod heat;
pub mod linalg;
pub mod mesh;
pub mod models;
pub mod noise;
pub mod output;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
