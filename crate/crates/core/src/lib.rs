pub mod error;
pub mod matrixkit;
pub mod seed;
pub mod spaces;
pub mod kernels;
pub mod geometry;
pub mod integrate;
pub mod cli;
