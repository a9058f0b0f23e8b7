//! Discretized Hamiltonian field theory on the flat torus.
//!
//! Fields are sampled on a uniform periodic grid, derivatives are centered
//! differences (skew-adjoint for the grid inner product) and the Hamiltonian
//! enters through a value/gradient pair checked at construction.
//!
//! Bridges fibers are ordered `(q₁ᵃ, q₂ᵃ, P₁ᵃ, P₂ᵃ)` per block, which is the
//! `(a₁, a₂, b₁, b₂)` ordering of [`crate::linalg::SplitSpace`].

mod gradcheck;
mod grid;
mod hamiltonian;
mod io;
mod ops;
mod symbol;
mod transition;

use thiserror::Error;

pub use gradcheck::{gradient_check, richardson_derivative, GradientCheck, RICHARDSON_STEPS};
pub use grid::{FiberLayout, FieldState, TorusGrid};
pub use hamiltonian::{HamiltonianSpec, BUILTIN_NAMES, GRADIENT_CHECK_POINTS, GRADIENT_CHECK_RTOL};
pub use io::{read_container, write_container, write_csv, CONTAINER_MAGIC, CONTAINER_VERSION};
pub use ops::{
    action, bridges_residual, ddw_residual, diff, diff_with, eliminate_momenta, gradient_pairing,
    gradient_with, l2_gradient, Axis, Stencil,
};
pub use symbol::{principal_symbol, OperatorTag, SymbolReport, KERNEL_RTOL};
pub use transition::{transition_check, TransitionPoint, TransitionReport};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite field values")]
    NonFinite,
    #[error("unknown hamiltonian {0:?}")]
    UnknownHamiltonian(String),
    #[error("invalid hamiltonian parameters: {0}")]
    BadParameters(String),
    #[error(
        "hamiltonian {name:?}: gradient component {component} disagrees with finite \
         differences at sample {sample} (relative error {relative_error:e})"
    )]
    GradientMismatch {
        name: String,
        sample: usize,
        component: usize,
        relative_error: f64,
    },
    #[error("zero covector")]
    ZeroCovector,
    #[error("malformed field container: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
