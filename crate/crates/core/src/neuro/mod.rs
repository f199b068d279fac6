//! Hand-rolled neural building blocks: dense matrices, MLPs, multi-head
//! attention, policy-head distributions, Adam, and finite-difference
//! gradient checking. Everything is f64 and CPU-only; the nets here are
//! small enough that simplicity beats BLAS.

pub mod adam;
pub mod attention;
pub mod beta;
pub mod gaussian;
pub mod gradcheck;
pub mod matrix;
pub mod mlp;
pub mod params;
pub mod special;

pub use adam::Adam;
pub use attention::MultiHeadAttention;
pub use matrix::Matrix;
pub use mlp::Mlp;
pub use params::ParamSet;
