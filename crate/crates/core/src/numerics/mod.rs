//! Dense linear algebra, thin SVD, and seeded pseudo-randomness.

mod matrix;
mod rng;
mod svd;

pub use matrix::DenseMatrix;
pub use rng::RandomStream;
pub use svd::{thin_svd, SvdResult};

pub use matrix::frobenius_norm;
