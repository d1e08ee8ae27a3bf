//! Sparse, history-based identification of a four-engine throttleable
//! lander propulsion system.
//!
//! The crate contains a surrogate propulsion plant that generates data, the
//! excitation signals that drive it, the history-extended feature map, an
//! L1-regularized polynomial regression, cross-validated hyperparameter
//! sweeps and autoregressive validation of the learned model.

pub mod error;
pub mod excitation;
pub mod features;
pub mod io;
pub mod pipeline;
pub mod plant;
pub mod regression;
pub mod rollout;
pub mod tuning;

pub use error::{Error, Result};
