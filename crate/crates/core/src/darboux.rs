//! Linear Darboux normal forms.
//!
//! [`crps_darboux`] puts a compatible pair `(ω₁, ω₂)` on `(V, I)` into the
//! standard form by a complex symplectic Gram–Schmidt process, and
//! [`crms_darboux`] lifts that to a frame of `T ⊕ V` in which a CRMS 3-form
//! reads
//!
//! ```text
//! Σₖ (β₁ᵏ∧α₁ᵏ + β₂ᵏ∧α₂ᵏ)∧ε₂ − (β₁ᵏ∧α₂ᵏ − β₂ᵏ∧α₁ᵏ)∧ε₁ + ν∧ε₁∧ε₂.
//! ```

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{
    condition_number, skew_defect, standard_crps_matrices, validate_crms, AlternatingThreeForm,
    LinalgError, LinearComplexStructure, SplitSpace, ValidationReport, MAX_CONDITION, TAU_ALG,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DarbouxError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("incompatible CRPS pair: {0}")]
    Incompatible(String),
    #[error("omega1 is degenerate on the remaining complement (step {step})")]
    Degenerate { step: usize },
    #[error("form is not CRMS")]
    NotCrms(Box<ValidationReport>),
}

/// A linear CRPS pair on `ℝ^{4n}` with the fiber complex structure.
///
/// Both forms are stored as Gram matrices, `ω[u,v] = uᵀ W v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpsPair {
    omega1: DMatrix<f64>,
    omega2: DMatrix<f64>,
    i_fiber: DMatrix<f64>,
}

impl CrpsPair {
    pub fn new(
        omega1: DMatrix<f64>,
        omega2: DMatrix<f64>,
        i_fiber: DMatrix<f64>,
    ) -> Result<Self, DarbouxError> {
        let f = omega1.nrows();
        SplitSpace::from_fiber_dim(f)?;
        for m in [&omega1, &omega2, &i_fiber] {
            if m.nrows() != f || m.ncols() != f {
                return Err(LinalgError::DimensionMismatch {
                    expected: f,
                    got: m.nrows().max(m.ncols()),
                }
                .into());
            }
        }
        let scale = omega1.amax().max(1.0);
        let iscale = i_fiber.amax().max(1.0);
        let sq = (&i_fiber * &i_fiber + DMatrix::identity(f, f)).amax();
        if sq > TAU_ALG * iscale * iscale {
            return Err(LinalgError::NotComplexStructure(sq).into());
        }
        for (name, m) in [("omega1", &omega1), ("omega2", &omega2)] {
            let defect = skew_defect(m);
            if defect > TAU_ALG * scale {
                return Err(DarbouxError::Incompatible(format!(
                    "{name} is not antisymmetric (defect {defect:e})"
                )));
            }
        }
        let defect = (&omega2 + &omega1 * &i_fiber).amax();
        if defect > TAU_ALG * scale * iscale {
            return Err(DarbouxError::Incompatible(format!(
                "omega2 != -omega1(., I .) (defect {defect:e})"
            )));
        }
        for m in [&omega1, &omega2] {
            let cond = condition_number(m);
            if cond.is_nan() || cond >= MAX_CONDITION {
                return Err(DarbouxError::Degenerate { step: 0 });
            }
        }
        Ok(Self {
            omega1,
            omega2,
            i_fiber,
        })
    }

    /// The standard pair on `ℝ^{4n}`.
    pub fn standard(n: usize) -> Self {
        let (w1, w2) = standard_crps_matrices(n);
        Self {
            omega1: w1,
            omega2: w2,
            i_fiber: crate::linalg::standard_fiber_structure(n),
        }
    }

    pub fn omega1(&self) -> &DMatrix<f64> {
        &self.omega1
    }

    pub fn omega2(&self) -> &DMatrix<f64> {
        &self.omega2
    }

    pub fn i_fiber(&self) -> &DMatrix<f64> {
        &self.i_fiber
    }

    pub fn n(&self) -> usize {
        self.omega1.nrows() / 4
    }
}

fn pairing(w: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(w * v))
}

/// Basis `(a₁ᵏ, a₂ᵏ, b₁ᵏ, b₂ᵏ)ₖ` of `ℝ^{4n}` (as columns) in which the pair
/// takes the standard form and `I a₁ = a₂`, `I b₁ = −b₂`.
pub fn crps_darboux(pair: &CrpsPair) -> Result<DMatrix<f64>, DarbouxError> {
    let f = pair.omega1.nrows();
    let w = &pair.omega1;
    let i = &pair.i_fiber;
    let scale = w.amax();
    let mut working: Vec<DVector<f64>> = (0..f)
        .map(|c| {
            let mut e = DVector::zeros(f);
            e[c] = 1.0;
            e
        })
        .collect();
    let mut basis = DMatrix::zeros(f, f);

    for step in 0..pair.n() {
        // a₁: working vector with the largest ω₁-row.
        let mut best = None;
        let mut best_val = 0.0;
        for (idx, v) in working.iter().enumerate() {
            let val = (w * v).amax();
            if val > best_val {
                best_val = val;
                best = Some(idx);
            }
        }
        let Some(pick) = best else {
            return Err(DarbouxError::Degenerate { step });
        };
        let a1 = &working[pick] / working[pick].norm();
        let a2 = i * &a1;

        // u maximizing |ω₁(u,a₁)|² + |ω₁(u,a₂)|²; then b₁ ∈ span{u, Iu}.
        let mut best = None;
        let mut best_val = 0.0;
        for (idx, v) in working.iter().enumerate() {
            let p = pairing(w, v, &a1);
            let q = pairing(w, v, &a2);
            let val = p * p + q * q;
            if val > best_val {
                best_val = val;
                best = Some((idx, p, q));
            }
        }
        let Some((uidx, p, q)) = best else {
            return Err(DarbouxError::Degenerate { step });
        };
        let u = &working[uidx];
        if best_val.sqrt() <= TAU_ALG * scale * u.norm() {
            return Err(DarbouxError::Degenerate { step });
        }
        let b1 = (u * p + (i * u) * q) / best_val;
        let b2 = -(i * &b1);

        for v in working.iter_mut() {
            let c_a1 = pairing(w, v, &b1);
            let c_a2 = pairing(w, v, &b2);
            let c_b1 = pairing(w, v, &a1);
            let c_b2 = pairing(w, v, &a2);
            *v += &a1 * c_a1 + &a2 * c_a2 - &b1 * c_b1 - &b2 * c_b2;
        }

        basis.set_column(4 * step, &a1);
        basis.set_column(4 * step + 1, &a2);
        basis.set_column(4 * step + 2, &b1);
        basis.set_column(4 * step + 3, &b2);
    }
    Ok(basis)
}

/// Largest entry of `Pᵀ ωᵢ P − ωᵢ_std` over both forms.
pub fn crps_pullback_error(pair: &CrpsPair, basis: &DMatrix<f64>) -> f64 {
    let (w1, w2) = standard_crps_matrices(pair.n());
    let e1 = (basis.transpose() * &pair.omega1 * basis - w1).amax();
    let e2 = (basis.transpose() * &pair.omega2 * basis - w2).amax();
    e1.max(e2)
}

/// A linear Darboux frame of `T ⊕ V`.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxFrame {
    /// Columns `(e₁, e₂, a₁ᵏ, a₂ᵏ, b₁ᵏ, b₂ᵏ)`.
    pub basis: DMatrix<f64>,
    /// Coefficients of `ν` in the dual Darboux coframe.
    pub nu: Vec<f64>,
    space: SplitSpace,
}

impl DarbouxFrame {
    pub fn space(&self) -> SplitSpace {
        self.space
    }

    /// The normal form `Ω_std + ν∧ε₁∧ε₂` in frame coordinates.
    pub fn normal_form(&self) -> AlternatingThreeForm {
        let mut form = AlternatingThreeForm::standard(self.space);
        form.add_nu_term(&self.nu).expect("nu has fiber length");
        form
    }

    /// Max entrywise difference between `Ω(F·,F·,F·)` and the normal form.
    pub fn reconstruction_error(&self, form: &AlternatingThreeForm) -> Result<f64, LinalgError> {
        let pulled = form.pullback(&self.basis)?;
        Ok(pulled.max_abs_diff(&self.normal_form()))
    }

    /// `‖I F − F I_std‖`, i.e. how far the frame is from `Ie₁ = e₂`,
    /// `Ia₁ = a₂`, `Ib₁ = −b₂`.
    pub fn structure_defect(&self, structure: &LinearComplexStructure) -> f64 {
        let istd = LinearComplexStructure::standard(self.space);
        (structure.matrix() * &self.basis - &self.basis * istd.matrix()).amax()
    }
}

/// `(e₁, e₂, ω₁, ω₂)`.
pub type Splitting = (Vec<f64>, Vec<f64>, DMatrix<f64>, DMatrix<f64>);

/// The contraction pair `ω₁ = Ω(e₂,·,·)|_V`, `ω₂ = −Ω(e₁,·,·)|_V` for the
/// complex-linear splitting `e₁ = (1,0 | 0)`, `e₂ = I e₁`.
pub fn splitting_pair(
    form: &AlternatingThreeForm,
    structure: &LinearComplexStructure,
) -> Result<Splitting, LinalgError> {
    let d = form.space().dim();
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let e2 = structure.apply(&e1)?;
    let omega1 = form.vertical_contraction(&e2)?;
    let omega2 = -form.vertical_contraction(&e1)?;
    Ok((e1, e2, omega1, omega2))
}

/// Darboux frame for a pointwise CRMS form.
pub fn crms_darboux(
    form: &AlternatingThreeForm,
    structure: &LinearComplexStructure,
) -> Result<DarbouxFrame, DarbouxError> {
    let report = validate_crms(form, structure)?;
    if !report.all_passed() {
        return Err(DarbouxError::NotCrms(Box::new(report)));
    }
    let space = form.space();
    let (e1, e2, omega1, omega2) = splitting_pair(form, structure)?;
    let pair = CrpsPair::new(omega1, omega2, structure.fiber_part())?;
    let fiber_basis = crps_darboux(&pair)?;

    let d = space.dim();
    let f = space.dim_fiber();
    let mut basis = DMatrix::zeros(d, d);
    basis.set_column(0, &DVector::from_vec(e1));
    basis.set_column(1, &DVector::from_vec(e2));
    basis.view_mut((2, 2), (f, f)).copy_from(&fiber_basis);

    let pulled = form.pullback(&basis)?;
    let nu = (0..f).map(|r| pulled.get(2 + r, 0, 1)).collect();
    Ok(DarbouxFrame { basis, nu, space })
}
