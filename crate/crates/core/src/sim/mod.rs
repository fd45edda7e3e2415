//! Dense statevector simulation.
//!
//! Conventions: qubit 0 is the least-significant bit of a basis index, and
//! rotations are `exp(-i θ P / 2)`.

mod circuit;
mod gate;
mod routines;
mod sampler;
mod statevector;

pub use circuit::{prepare_real_amplitudes, Circuit, Instruction};
pub use gate::GateOp;
pub use routines::{grover_reflections, hadamard_test, hadamard_test_probabilities, hadamard_test_with_signs};
pub use sampler::{derive_seed, sample_measurement, Histogram, ShotSampler};
pub use statevector::{Statevector, MAX_QUBITS};
