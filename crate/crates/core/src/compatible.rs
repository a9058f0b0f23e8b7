//! Compatible metric and almost-complex structures by polar decomposition.
//!
//! Given the contraction forms `ω₁, ω₂` of a CRMS form at a point and a
//! reference inner product `(·,·)` compatible with `I`, write
//! `ω₁ = (·, A·)`, take the polar factor `B = √(A Aᵀ)` (transposes with
//! respect to the reference), and set
//!
//! ```text
//! J₁ = B⁻¹A,   J₂ = I J₁,   g = (·, B·).
//! ```
//!
//! Then `J₁² = J₂² = −Id`, `ω₁ = g(·, J₁·)` and `ω₂ = g(·, J₂·)`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{
    condition_number, skew_defect, standard_crps_matrices, standard_fiber_structure, LinalgError,
    SpdMatrix, MAX_CONDITION, TAU_ALG,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatibleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("reference inner product is not I-compatible (defect {0:e})")]
    ReferenceNotCompatible(f64),
    #[error("omega2 is inconsistent with omega1 (defect {0:e})")]
    InconsistentPair(f64),
    #[error("omega1 is singular (condition number {0:e})")]
    SingularOmega(f64),
    #[error("A does not anticommute with I (defect {0:e})")]
    NotAnticommuting(f64),
    #[error("zero direction")]
    ZeroDirection,
}

/// Fiber metric and the two almost-complex structures of a unit frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibleTriple {
    /// Fiber inner product `g = (·, B·)`, as a Gram matrix.
    pub g: SpdMatrix,
    /// `𝔍(ρ₁)`, with `ω₁ = g(·, J₁·)`.
    pub j1: DMatrix<f64>,
    /// `𝔍(jρ₁) = I J₁`, with `ω₂ = g(·, J₂·)`.
    pub j2: DMatrix<f64>,
    /// Polar factor in reference-orthonormal coordinates (`L⁻¹(·)L⁻ᵀ` of
    /// the reference Cholesky factor `L`).
    pub b: SpdMatrix,
    /// The polar factor as an operator on the fiber.
    pub b_operator: DMatrix<f64>,
    /// `g⁻¹`, cached for gradient computations.
    pub g_inverse: DMatrix<f64>,
    pub i_fiber: DMatrix<f64>,
}

/// Largest violation of each triple invariant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleDefects {
    pub j1_square: f64,
    pub j2_square: f64,
    pub j2_is_i_j1: f64,
    pub anticommute: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl TripleDefects {
    pub fn max(&self) -> f64 {
        [
            self.j1_square,
            self.j2_square,
            self.j2_is_i_j1,
            self.anticommute,
            self.omega1,
            self.omega2,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl CompatibleTriple {
    pub fn dim(&self) -> usize {
        self.j1.nrows()
    }

    /// Defects of all invariants against the forms the triple was built from.
    pub fn defects(&self, omega1: &DMatrix<f64>, omega2: &DMatrix<f64>) -> TripleDefects {
        let f = self.dim();
        let id = DMatrix::<f64>::identity(f, f);
        let g = self.g.matrix();
        TripleDefects {
            j1_square: (&self.j1 * &self.j1 + &id).amax(),
            j2_square: (&self.j2 * &self.j2 + &id).amax(),
            j2_is_i_j1: (&self.j2 - &self.i_fiber * &self.j1).amax(),
            anticommute: (&self.j1 * &self.j2 + &self.j2 * &self.j1).amax(),
            omega1: (g * &self.j1 - omega1).amax(),
            omega2: (g * &self.j2 - omega2).amax(),
        }
    }

    /// `𝔍(a ρ₁ + b jρ₁) = a J₁ + b J₂` for frame coordinates `rho = (a, b)`.
    pub fn j_of_direction(&self, rho: [f64; 2]) -> Result<DMatrix<f64>, CompatibleError> {
        if rho[0] == 0.0 && rho[1] == 0.0 {
            return Err(CompatibleError::ZeroDirection);
        }
        Ok(&self.j1 * rho[0] + &self.j2 * rho[1])
    }

    /// `𝔍` of a base tangent vector `ξ = ξ₁∂₁ + ξ₂∂₂`.
    ///
    /// The contraction of the standard form is `ω^ξ = ξ₂ω₁ − ξ₁ω₂`, so the
    /// unit frame is `ρ₁ = ∂₂`, `jρ₁ = −∂₁`.
    pub fn j_of_tangent(&self, xi: [f64; 2]) -> Result<DMatrix<f64>, CompatibleError> {
        self.j_of_direction([xi[1], -xi[0]])
    }
}

/// Build the compatible triple from a CRPS pair and a reference metric.
pub fn build_compatible(
    omega1: &DMatrix<f64>,
    omega2: &DMatrix<f64>,
    i_fiber: &DMatrix<f64>,
    reference: &SpdMatrix,
) -> Result<CompatibleTriple, CompatibleError> {
    let f = omega1.nrows();
    for m in [omega1, omega2, i_fiber, reference.matrix()] {
        if m.nrows() != f || m.ncols() != f {
            return Err(LinalgError::DimensionMismatch {
                expected: f,
                got: m.nrows().max(m.ncols()),
            }
            .into());
        }
    }
    let gref = reference.matrix();
    let rscale = gref.amax().max(1.0) * i_fiber.amax().max(1.0).powi(2);
    let ref_defect = (i_fiber.transpose() * gref * i_fiber - gref).amax();
    if ref_defect > TAU_ALG * rscale {
        return Err(CompatibleError::ReferenceNotCompatible(ref_defect));
    }
    let scale = omega1.amax().max(1.0);
    let pair_defect = (omega2 + omega1 * i_fiber).amax();
    if pair_defect > TAU_ALG * scale * i_fiber.amax().max(1.0) {
        return Err(CompatibleError::InconsistentPair(pair_defect));
    }
    let skew = skew_defect(omega1).max(skew_defect(omega2));
    if skew > TAU_ALG * scale {
        return Err(CompatibleError::InconsistentPair(skew));
    }
    let cond = condition_number(omega1);
    if cond.is_nan() || cond >= MAX_CONDITION {
        return Err(CompatibleError::SingularOmega(cond));
    }

    let chol = gref
        .clone()
        .cholesky()
        .ok_or(LinalgError::NotPositiveDefinite(0.0))?;
    let l = chol.l();
    let l_t = l.transpose();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(f, f))
        .ok_or(LinalgError::Singular)?;
    let l_inv_t = l_inv.transpose();

    // ω₁ = G A, so A = G⁻¹ W₁; checked against I directly.
    let a = chol.solve(omega1);
    let anti = (&a * i_fiber + i_fiber * &a).amax();
    if anti > TAU_ALG * a.amax().max(1.0) * i_fiber.amax().max(1.0) {
        return Err(CompatibleError::NotAnticommuting(anti));
    }

    // Reference-orthonormal coordinates: Ã = L⁻¹ W₁ L⁻ᵀ is antisymmetric.
    let a_tilde = {
        let m = &l_inv * omega1 * &l_inv_t;
        (&m - m.transpose()) * 0.5
    };
    let aat = SpdMatrix::new(&a_tilde * a_tilde.transpose())?;
    let (b_tilde, b_tilde_inv) = aat.sqrt_with_inverse();
    let j1_tilde = &b_tilde_inv * &a_tilde;

    let j1 = &l_inv_t * j1_tilde * &l_t;
    let b_operator = &l_inv_t * b_tilde.matrix() * &l_t;
    let g = {
        let m = &l * b_tilde.matrix() * &l_t;
        SpdMatrix::new((&m + m.transpose()) * 0.5)?
    };
    let g_inverse = &l_inv_t * &b_tilde_inv * &l_inv;
    let j2 = i_fiber * &j1;
    Ok(CompatibleTriple {
        g,
        j1,
        j2,
        b: b_tilde,
        b_operator,
        g_inverse,
        i_fiber: i_fiber.clone(),
    })
}

/// The triple of the standard flat pair with identity reference.
pub fn standard_triple(n: usize) -> CompatibleTriple {
    let (w1, w2) = standard_crps_matrices(n);
    build_compatible(
        &w1,
        &w2,
        &standard_fiber_structure(n),
        &SpdMatrix::identity(4 * n),
    )
    .expect("standard pair is compatible")
}
