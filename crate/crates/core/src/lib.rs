//! Complex-regularized multisymplectic geometry, computationally.
//!
//! * [`linalg`]: split spaces, alternating 3-forms, complex structures, SPD
//!   square roots and the pointwise CRMS validator.
//! * [`darboux`]: linear CRPS and CRMS Darboux frames.
//! * [`compatible`]: metric and almost-complex structures by polar
//!   decomposition.
//! * [`field`]: discretized Hamiltonian field theory on the flat torus.
//! * [`flow`]: the negative gradient (Fueter) flow of the action.

pub mod compatible;
pub mod darboux;
pub mod field;
pub mod flow;
pub mod linalg;
pub mod samples;
mod sum;
