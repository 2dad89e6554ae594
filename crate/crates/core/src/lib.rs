//! Reduced-order modeling toolkit built around a POD/neural hybrid
//! autoencoder with learnable blend weights.
//!
//! The crate provides four autoencoding variants (POD, vanilla AE, simple
//! hybrid, learnable weighted hybrid), Koopman forecasting with learnable
//! frequencies, LSTM surrogates over latent trajectories, self-contained 1D
//! PDE data generators (Kuramoto-Sivashinsky, viscous Burgers, traveling
//! wave), and the evaluation machinery (reconstruction error, sharpness,
//! noise robustness, rank-convergence fits) needed to study them.

pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod koopman;
pub mod nn;
pub mod numerics;
pub mod rom;
pub mod surrogate;
pub mod training;

pub use error::{Error, Result};
pub use numerics::{DenseMatrix, RandomStream, SvdResult};
