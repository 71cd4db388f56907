//! Compile arbitrary quantum channels into single-ancilla adaptive circuits.
//!
//! A channel given as Kraus operators, a superoperator or a Choi matrix is
//! turned into a binary tree of system-ancilla rounds ([`tree::synthesize`]),
//! each of which factors into cQED-native gates ([`cqed::decompose_circuit`]).
//! The [`sim`] module executes circuits exactly or by sampled trajectories,
//! and [`applications`] builds the worked examples: state stabilization,
//! cat pumping, binomial-code recovery and the corner transpose.
//!
//! Density matrices are vectorized row by row: `vec(ρ)[i·d + j] = ρᵢⱼ`.

pub mod applications;
pub mod channel;
pub mod cqed;
pub mod error;
pub mod io;
pub mod linalg;
pub mod random;
pub mod sim;
pub mod tree;

pub use channel::{ChannelSpec, ChoiMatrix, KrausSet, Representation, SuperOperator};
pub use cqed::{decompose_circuit, CqedCircuit, CqedRound};
pub use error::{Error, Result};
pub use sim::{DensityMatrix, RngSeed};
pub use tree::{synthesize, verify_circuit, AdaptiveCircuit, BinaryLabel};
