//! Hilbert-Schmidt separability probabilities for pairs of rebits, qubits and
//! quaterbits.
//!
//! The crate has two halves. The Monte Carlo side ([`sampler`], [`states`],
//! [`engine`]) draws coefficient vectors uniformly from the outsphere ball of
//! each state family, keeps the ones that are valid density matrices and
//! counts how many of those have a positive partial transpose. The analytic
//! side ([`conjecture`]) sums the closed-form series `P(alpha)` that the
//! estimates are compared against.

pub mod algebra;
pub mod conjecture;
pub mod engine;
mod error;
pub mod oracle;
pub mod sampler;
pub mod selftest;
pub mod states;

pub use error::{Error, Result};
pub use states::StateCase;
