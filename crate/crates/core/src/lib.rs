#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod config;
pub mod diffusion;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod particle;
pub mod path;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod thinning;
pub mod bessel;
pub mod bounds;
pub mod sausage;
pub mod percolation;
pub mod harness;
