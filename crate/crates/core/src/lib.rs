//! Trainable quantum feature maps, quantum-kernel support vector machines
//! and Grover-amplified multiclass readout on an exact statevector
//! simulator.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiments;
pub mod feature_map;
pub mod kernel;
pub mod multiclass;
pub mod optimizer;
pub mod sim;
pub mod svm;

pub use error::{Error, Result};
