//! Simulation of concatenated dynamical decoupling protecting exchange-only
//! gates on a four-spin decoherence-free code, coupled to a small spin bath.
//!
//! Numerics are generic over the scalar field ([`Real`]); the aliases below
//! name the two shipped backends.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dfs;
pub mod engine;
pub mod error;
pub mod model;
pub mod operator;
pub mod scalar;
pub mod sequence;

pub use engine::{simulate, FidelityRecord, PropagatorCache, Simulator};
pub use error::{Error, Result};
pub use operator::{
    compose, expm_hermitian, kron, partial_trace_bath, spectral_norm, Axis, Basis, BlockOperator,
    Operator, PauliString, PauliSum, Spectrum, StateVector,
};
pub use scalar::{Double, Precision, Real};

pub type Operator64 = Operator<f64>;
pub type OperatorExt = Operator<Double>;
pub type StateVector64 = StateVector<f64>;
pub type StateVectorExt = StateVector<Double>;
