//! Entanglement of noisy graph states: exact evaluation for Pauli noise and
//! bounds for general commuting noise, with a brute-force density-matrix
//! oracle and an experiment driver.

pub mod bounds;
pub mod channels;
pub mod density;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod numeric;
pub mod oracle;
pub mod partition;

pub use error::{Error, Limits, Result};
