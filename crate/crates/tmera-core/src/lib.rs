//! Classical engine for Trotterized MERA (TMERA) states of critical 1D
//! quantum spin chains: tensor-circuit construction, causal-cone energy
//! contraction, Riemannian and Euclidean L-BFGS optimization, convergence
//! schemes, and quantum-vs-classical cost accounting.

pub mod circuits;
pub mod contraction;
pub mod costmodel;
pub mod error;
pub mod models;
pub mod network;
pub mod optimize;
pub mod record;
pub mod schemes;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Rng, Tensor};
