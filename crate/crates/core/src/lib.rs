//! Multi-view clustering with tensor-regularized graph learning.
//!
//! The crate is organised bottom-up: [`tensor`] provides third-order tensor
//! algebra in the Fourier domain, [`graph`] builds per-view graphs, [`tcgf`]
//! and [`gcmf`] are the two multi-view solvers, and [`cluster`] turns
//! embeddings into labels and scores them.

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod gcmf;
pub mod graph;
pub mod linalg;
pub mod tcgf;
pub mod tensor;

pub use error::{Error, Result};
