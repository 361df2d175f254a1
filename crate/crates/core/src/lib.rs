//! Input-output models of open-quantum-system dynamics.
//!
//! Lindblad master equations on a few qubits are turned into closed linear
//! systems over Pauli expectation values ([`eom`]), split into a subsystem of
//! interest and an environment, and the environment is shrunk by balanced
//! truncation ([`mor`]). The same expectation-value view turns bit-flip code
//! recovery into an affine map ([`qec`]). Everything is cross-checked against a
//! direct density-matrix integration ([`sim::oracle`]).

pub mod eom;
pub mod error;
pub mod linalg;
pub mod models;
pub mod mor;
pub mod pauli;
pub mod qec;
pub mod scenario;
pub mod sim;
pub mod statespace;

pub use eom::{
    build_generator, closure, initial_expectations, partition_and_factor, GeneratorMatrix,
    InitialState, VariableSet,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances, Vector};
pub use mor::{
    balance, hinf_norm, reduce_interconnected, transfer_eval, truncate, BalancedRealization,
    ReducedModel,
};
pub use pauli::{
    adjoint_generator, commutator, identity_coefficient, multiply, Letter, LindbladModel,
    PauliPolynomial, PauliString, Phase, ScaledPauli,
};
pub use qec::{
    bitflip3, concatenate, decode_functional, logical_dynamics, recovery_superoperator, run_cycles,
    DecodingFunctional, RecoveryChannel, StabilizerCode,
};
pub use scenario::Scenario;
pub use sim::oracle::{expectations_from_state, oracle_master_equation, DensityMatrix};
pub use sim::{integrate_linear, simulate_interconnected, Trajectory};
pub use statespace::{InterconnectedModel, StateSpaceModel};
