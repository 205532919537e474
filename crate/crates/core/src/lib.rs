//! Learning two unknown pure qubit states, and how often each occurs, from
//! measurements on pairs of identically prepared qubits.

pub mod config;
pub mod error;
pub mod estimate;
pub mod linalg;
pub mod plausible;
pub mod povm;
pub mod qstate;
pub mod recon;
pub mod sim;

pub use error::{Error, Result};
