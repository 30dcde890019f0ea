//! Sum-rate bounds and noisy-interference certificates for two-user vector
//! Gaussian interference channels.
//!
//! The crate computes the best sum rate achievable when each receiver treats
//! interference as noise (TIN), a genie-aided upper bound on the sum
//! capacity, and certificates that the two coincide. Rates are in nats.

pub mod certifier;
pub mod channel_model;
pub mod cli_report;
pub mod error;
pub mod genie_bound;
pub mod matrix_kit;
pub mod miso_simo;
pub mod tin_bound;

pub use error::{Error, Result};
