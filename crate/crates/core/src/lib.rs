//! Super-resolution recovery of spike trains from band-limited spectral
//! samples: the classical Prony method, its decimated variant, an ESPRIT
//! baseline, and the evaluation metrics used to benchmark them.

pub mod dpm;
pub mod error;
pub mod esprit;
pub mod linalg;
pub mod metrics;
pub mod prony;
pub mod signal;

pub use error::{Error, Result};
