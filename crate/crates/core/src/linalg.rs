//! Pointwise linear algebra for CRMS forms.
//!
//! A point of the total space is modelled by the split vector space
//! `W = T ⊕ V` with `dim T = 2` and `dim V = 4n`. The basis is ordered
//!
//! ```text
//! (e1, e2 | a1¹, a2¹, b1¹, b2¹, …, a1ⁿ, a2ⁿ, b1ⁿ, b2ⁿ)
//! ```
//!
//! which matches the flat fiber coordinates `(q1, q2, P1, P2)` per complex
//! dimension. With this ordering the standard complex structure and the
//! standard CRMS form are block diagonal in the complex fiber dimension.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

/// Tolerance for all algebraic identity checks.
pub const TAU_ALG: f64 = 1e-9;

/// Contraction matrices with a condition number above this are degenerate.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fiber dimension {0} is not a positive multiple of 4")]
    BadFiberDimension(usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("matrix does not square to -Id (defect {0:e})")]
    NotComplexStructure(f64),
    #[error("complex structure is not block-lower-triangular (top-right block {0:e})")]
    NotLowerTriangular(f64),
    #[error("matrix is singular")]
    Singular,
}

/// The split space `T ⊕ V` with `dim T = 2`, `dim V = 4n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSpace {
    n: usize,
}

impl SplitSpace {
    pub const DIM_BASE: usize = 2;

    /// Space with `n ≥ 1` complex fiber pairs, i.e. fiber dimension `4n`.
    pub fn new(n: usize) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::BadFiberDimension(0));
        }
        Ok(Self { n })
    }

    pub fn from_fiber_dim(dim_fiber: usize) -> Result<Self, LinalgError> {
        if dim_fiber == 0 || !dim_fiber.is_multiple_of(4) {
            return Err(LinalgError::BadFiberDimension(dim_fiber));
        }
        Ok(Self { n: dim_fiber / 4 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_base(&self) -> usize {
        Self::DIM_BASE
    }

    pub fn dim_fiber(&self) -> usize {
        4 * self.n
    }

    pub fn dim(&self) -> usize {
        Self::DIM_BASE + 4 * self.n
    }

    pub fn is_vertical(&self, index: usize) -> bool {
        index >= Self::DIM_BASE && index < self.dim()
    }

    pub fn vertical_indices(&self) -> std::ops::Range<usize> {
        Self::DIM_BASE..self.dim()
    }

    /// Total-space index of `a1ᵏ` (zero-based `k`).
    pub fn a1(&self, k: usize) -> usize {
        2 + 4 * k
    }

    pub fn a2(&self, k: usize) -> usize {
        3 + 4 * k
    }

    pub fn b1(&self, k: usize) -> usize {
        4 + 4 * k
    }

    pub fn b2(&self, k: usize) -> usize {
        5 + 4 * k
    }

    fn check_len(&self, len: usize) -> Result<(), LinalgError> {
        if len != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }
}

/// Sorted index triples `i < j < k` below `d`.
fn sorted_triples(d: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..d).flat_map(move |i| (i + 1..d).flat_map(move |j| (j + 1..d).map(move |k| (i, j, k))))
}

/// The six orderings of a triple together with their permutation signs.
fn signed_permutations(i: usize, j: usize, k: usize) -> [(usize, usize, usize, f64); 6] {
    [
        (i, j, k, 1.0),
        (j, k, i, 1.0),
        (k, i, j, 1.0),
        (j, i, k, -1.0),
        (i, k, j, -1.0),
        (k, j, i, -1.0),
    ]
}

/// Project a dense `d×d×d` tensor onto its totally antisymmetric part.
///
/// When the six signed entries of a triple already agree they are copied
/// through unchanged, so the projection is exactly idempotent.
pub fn antisymmetrize(coeffs: &[f64], d: usize) -> Vec<f64> {
    assert_eq!(coeffs.len(), d * d * d, "tensor shape mismatch");
    let idx = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    let mut out = vec![0.0; d * d * d];
    for (i, j, k) in sorted_triples(d) {
        let perms = signed_permutations(i, j, k);
        let signed: Vec<f64> = perms
            .iter()
            .map(|&(a, b, c, s)| s * coeffs[idx(a, b, c)])
            .collect();
        let value = if signed.iter().all(|v| *v == signed[0]) {
            signed[0]
        } else {
            signed.iter().sum::<f64>() / 6.0
        };
        for &(a, b, c, s) in &perms {
            out[idx(a, b, c)] = s * value;
        }
    }
    out
}

/// Dense alternating 3-form on `T ⊕ V`.
///
/// `coeffs[i][j][k]` is the value on the basis triple `(e_i, e_j, e_k)`, so
/// `Ω(u, v, w) = Σ coeffs[i,j,k] u_i v_j w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingThreeForm {
    space: SplitSpace,
    coeffs: Vec<f64>,
}

impl AlternatingThreeForm {
    pub fn zeros(space: SplitSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            coeffs: vec![0.0; d * d * d],
        }
    }

    /// Build from an arbitrary dense tensor, keeping its alternating part.
    pub fn from_tensor(space: SplitSpace, coeffs: Vec<f64>) -> Result<Self, LinalgError> {
        let d = space.dim();
        if coeffs.len() != d * d * d {
            return Err(LinalgError::DimensionMismatch {
                expected: d * d * d,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            space,
            coeffs: antisymmetrize(&coeffs, d),
        })
    }

    /// The standard form
    /// `Σₖ (β₁ᵏ∧α₁ᵏ + β₂ᵏ∧α₂ᵏ)∧ε₂ − (β₁ᵏ∧α₂ᵏ − β₂ᵏ∧α₁ᵏ)∧ε₁`.
    pub fn standard(space: SplitSpace) -> Self {
        let mut form = Self::zeros(space);
        for k in 0..space.n() {
            let (a1, a2, b1, b2) = (space.a1(k), space.a2(k), space.b1(k), space.b2(k));
            form.add_wedge(1.0, b1, a1, 1);
            form.add_wedge(1.0, b2, a2, 1);
            form.add_wedge(-1.0, b1, a2, 0);
            form.add_wedge(1.0, b2, a1, 0);
        }
        form
    }

    /// Add `coef · εⁱ∧εʲ∧εᵏ` for dual basis covectors.
    pub fn add_wedge(&mut self, coef: f64, i: usize, j: usize, k: usize) {
        if i == j || j == k || i == k {
            return;
        }
        for (a, b, c, s) in signed_permutations(i, j, k) {
            let at = self.index(a, b, c);
            self.coeffs[at] += s * coef;
        }
    }

    /// Add `μ∧ε₁∧ε₂` for a vertical covector `μ` (length `4n`).
    pub fn add_nu_term(&mut self, mu: &[f64]) -> Result<(), LinalgError> {
        if mu.len() != self.space.dim_fiber() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.space.dim_fiber(),
                got: mu.len(),
            });
        }
        for (r, &m) in mu.iter().enumerate() {
            self.add_wedge(m, 2 + r, 0, 1);
        }
        Ok(())
    }

    pub fn space(&self) -> SplitSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.space.dim();
        (i * d + j) * d + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeffs[self.index(i, j, k)]
    }

    /// Overwrite the coefficient of the basis triple, keeping alternation.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        if i == j || j == k || i == k {
            return;
        }
        for (a, b, c, s) in signed_permutations(i, j, k) {
            let at = self.index(a, b, c);
            self.coeffs[at] = s * value;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `Ω(u, v, w)`, summed over sorted triples with 3×3 determinants.
    pub fn evaluate(&self, u: &[f64], v: &[f64], w: &[f64]) -> Result<f64, LinalgError> {
        self.space.check_len(u.len())?;
        self.space.check_len(v.len())?;
        self.space.check_len(w.len())?;
        let mut total = 0.0;
        for (i, j, k) in sorted_triples(self.space.dim()) {
            let c = self.get(i, j, k);
            if c == 0.0 {
                continue;
            }
            let det = u[i] * (v[j] * w[k] - v[k] * w[j]) - u[j] * (v[i] * w[k] - v[k] * w[i])
                + u[k] * (v[i] * w[j] - v[j] * w[i]);
            total += c * det;
        }
        Ok(total)
    }

    /// The bilinear form `Ω(ξ, ·, ·)` on all of `W`, as a `d×d` matrix.
    pub fn contract(&self, xi: &[f64]) -> Result<DMatrix<f64>, LinalgError> {
        self.space.check_len(xi.len())?;
        let d = self.space.dim();
        let mut m = DMatrix::zeros(d, d);
        for (a, &x) in xi.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for j in 0..d {
                for k in 0..d {
                    m[(j, k)] += x * self.get(a, j, k);
                }
            }
        }
        Ok(m)
    }

    /// `Ω(ξ, ·, ·)|_V`, the `4n×4n` contraction restricted to the fiber.
    pub fn vertical_contraction(&self, xi: &[f64]) -> Result<DMatrix<f64>, LinalgError> {
        let full = self.contract(xi)?;
        let f = self.space.dim_fiber();
        Ok(full.view((2, 2), (f, f)).into_owned())
    }

    /// Pullback `Ω(F·, F·, F·)` along a linear map given by its matrix.
    pub fn pullback(&self, frame: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let d = self.space.dim();
        if frame.nrows() != d || frame.ncols() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                got: frame.nrows().max(frame.ncols()),
            });
        }
        // Three successive single-index contractions, d⁴ work each.
        let idx = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
        let mut stage = vec![0.0; d * d * d];
        for a in 0..d {
            for i in 0..d {
                let f = frame[(i, a)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    for k in 0..d {
                        stage[idx(a, j, k)] += f * self.coeffs[idx(i, j, k)];
                    }
                }
            }
        }
        let mut stage2 = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for j in 0..d {
                    let f = frame[(j, b)];
                    if f == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        stage2[idx(a, b, k)] += f * stage[idx(a, j, k)];
                    }
                }
            }
        }
        let mut out = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += frame[(k, c)] * stage2[idx(a, b, k)];
                    }
                    out[idx(a, b, c)] = s;
                }
            }
        }
        Self::from_tensor(self.space, out)
    }
}

/// A linear complex structure on `T ⊕ V`, block-lower-triangular:
///
/// ```text
/// I = | j   0  |
///     | A   I′ |
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct LinearComplexStructure {
    space: SplitSpace,
    matrix: DMatrix<f64>,
}

impl LinearComplexStructure {
    pub fn new(space: SplitSpace, matrix: DMatrix<f64>) -> Result<Self, LinalgError> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let scale = matrix.amax().max(1.0);
        let top_right = matrix.view((0, 2), (2, space.dim_fiber())).amax();
        if top_right > TAU_ALG * scale {
            return Err(LinalgError::NotLowerTriangular(top_right));
        }
        let defect = (&matrix * &matrix + DMatrix::identity(d, d)).amax();
        if defect > TAU_ALG * scale * scale {
            return Err(LinalgError::NotComplexStructure(defect));
        }
        Ok(Self { space, matrix })
    }

    /// `I e1 = e2`, `I a1 = a2`, `I b1 = −b2` on every fiber block.
    pub fn standard(space: SplitSpace) -> Self {
        let d = space.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(1, 0)] = 1.0;
        m[(0, 1)] = -1.0;
        let fiber = standard_fiber_structure(space.n());
        m.view_mut((2, 2), (space.dim_fiber(), space.dim_fiber()))
            .copy_from(&fiber);
        Self { space, matrix: m }
    }

    pub fn space(&self) -> SplitSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn base_part(&self) -> DMatrix<f64> {
        self.matrix.view((0, 0), (2, 2)).into_owned()
    }

    pub fn fiber_part(&self) -> DMatrix<f64> {
        let f = self.space.dim_fiber();
        self.matrix.view((2, 2), (f, f)).into_owned()
    }

    pub fn coupling(&self) -> DMatrix<f64> {
        self.matrix
            .view((2, 0), (self.space.dim_fiber(), 2))
            .into_owned()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.space.check_len(v.len())?;
        Ok((&self.matrix * DVector::from_column_slice(v))
            .as_slice()
            .to_vec())
    }

    /// Conjugate by an invertible change of frame: `F⁻¹ I F`.
    ///
    /// The result is the structure seen in the frame whose columns are `F`;
    /// if `Ω` is CRMS for `I`, then `Ω(F·,F·,F·)` is CRMS for `F⁻¹ I F`.
    pub fn conjugate(&self, frame: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let inv = frame.clone().try_inverse().ok_or(LinalgError::Singular)?;
        Self::new(self.space, inv * &self.matrix * frame)
    }
}

/// Standard fiber complex structure on `ℝ^{4n}`: `a1 ↦ a2`, `b1 ↦ −b2`.
pub fn standard_fiber_structure(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    for k in 0..n {
        let (a1, a2, b1, b2) = (4 * k, 4 * k + 1, 4 * k + 2, 4 * k + 3);
        m[(a2, a1)] = 1.0;
        m[(a1, a2)] = -1.0;
        m[(b2, b1)] = -1.0;
        m[(b1, b2)] = 1.0;
    }
    m
}

/// Standard CRPS pair on `ℝ^{4n}`:
/// `ω₁ = Σ β₁∧α₁ + β₂∧α₂`, `ω₂ = Σ β₁∧α₂ − β₂∧α₁`, as Gram matrices
/// `ω[u,v] = uᵀ W v`.
pub fn standard_crps_matrices(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut w1 = DMatrix::zeros(4 * n, 4 * n);
    let mut w2 = DMatrix::zeros(4 * n, 4 * n);
    for k in 0..n {
        let (a1, a2, b1, b2) = (4 * k, 4 * k + 1, 4 * k + 2, 4 * k + 3);
        w1[(b1, a1)] = 1.0;
        w1[(a1, b1)] = -1.0;
        w1[(b2, a2)] = 1.0;
        w1[(a2, b2)] = -1.0;
        w2[(b1, a2)] = 1.0;
        w2[(a2, b1)] = -1.0;
        w2[(b2, a1)] = -1.0;
        w2[(a1, b2)] = 1.0;
    }
    (w1, w2)
}

/// Largest entry of `m − mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Largest entry of `m + mᵀ`.
pub fn skew_defect(m: &DMatrix<f64>) -> f64 {
    (m + m.transpose()).amax()
}

/// 2-norm condition number from singular values; `inf` when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let scale = matrix.amax().max(1.0);
        let asym = asymmetry(&matrix);
        if asym > TAU_ALG * scale {
            return Err(LinalgError::NotSymmetric(asym));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let min_eig = sym.clone().symmetric_eigenvalues().min();
        if min_eig <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite(min_eig));
        }
        Ok(Self { matrix: sym })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Square root and inverse from one symmetric eigendecomposition.
    pub fn sqrt_with_inverse(&self) -> (SpdMatrix, DMatrix<f64>) {
        let SymmetricEigen {
            eigenvectors,
            eigenvalues,
        } = SymmetricEigen::new(self.matrix.clone());
        let roots = eigenvalues.map(|l| l.max(0.0).sqrt());
        let build = |diag: DVector<f64>| {
            let m = &eigenvectors * DMatrix::from_diagonal(&diag) * eigenvectors.transpose();
            (&m + m.transpose()) * 0.5
        };
        let sqrt = build(roots.clone());
        let inv_sqrt = build(roots.map(|r| 1.0 / r));
        (SpdMatrix { matrix: sqrt }, inv_sqrt)
    }
}

/// Principal square root of an SPD matrix via symmetric eigendecomposition.
pub fn matrix_sqrt_spd(m: &DMatrix<f64>) -> Result<SpdMatrix, LinalgError> {
    let spd = SpdMatrix::new(m.clone())?;
    Ok(spd.sqrt_with_inverse().0)
}

/// Evidence attached to a failed condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Nonzero value on three vertical basis vectors.
    VerticalTriple { indices: [usize; 3], value: f64 },
    /// Ill-conditioned `Ω(ξ,·,·)|_V` for the horizontal basis vector `xi`.
    Degenerate { xi: usize, condition_number: f64 },
    /// `Ω(Iξ,v₁,v₂) + Ω(ξ,v₁,Iv₂) ≠ 0` on basis vectors.
    Incompatible {
        xi: usize,
        v1: usize,
        v2: usize,
        defect: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionOutcome {
    pub passed: bool,
    pub witness: Option<Witness>,
}

impl ConditionOutcome {
    fn pass() -> Self {
        Self {
            passed: true,
            witness: None,
        }
    }

    fn fail(witness: Witness) -> Self {
        Self {
            passed: false,
            witness: Some(witness),
        }
    }
}

/// Closedness has no content for a constant-coefficient form at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Applicability {
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub closed: Applicability,
    pub one_horizontal: ConditionOutcome,
    pub fiberwise_nondegenerate: ConditionOutcome,
    pub i_compatible: ConditionOutcome,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.one_horizontal.passed
            && self.fiberwise_nondegenerate.passed
            && self.i_compatible.passed
    }
}

/// Check the pointwise CRMS conditions of `form` against `structure`.
pub fn validate_crms(
    form: &AlternatingThreeForm,
    structure: &LinearComplexStructure,
) -> Result<ValidationReport, LinalgError> {
    let space = form.space();
    if structure.space() != space {
        return Err(LinalgError::DimensionMismatch {
            expected: space.dim(),
            got: structure.space().dim(),
        });
    }
    let d = space.dim();
    let tol = TAU_ALG * form.max_abs().max(1.0);

    let vertical: Vec<usize> = space.vertical_indices().collect();
    let mut one_horizontal = ConditionOutcome::pass();
    'outer: for (p, &i) in vertical.iter().enumerate() {
        for (q, &j) in vertical.iter().enumerate().skip(p + 1) {
            for &k in vertical.iter().skip(q + 1) {
                let value = form.get(i, j, k);
                if value.abs() > tol {
                    one_horizontal = ConditionOutcome::fail(Witness::VerticalTriple {
                        indices: [i, j, k],
                        value,
                    });
                    break 'outer;
                }
            }
        }
    }

    let mut fiberwise_nondegenerate = ConditionOutcome::pass();
    for xi in 0..SplitSpace::DIM_BASE {
        let mut e = vec![0.0; d];
        e[xi] = 1.0;
        let block = form.vertical_contraction(&e)?;
        let cond = condition_number(&block);
        if cond.is_nan() || cond >= MAX_CONDITION {
            fiberwise_nondegenerate = ConditionOutcome::fail(Witness::Degenerate {
                xi,
                condition_number: cond,
            });
            break;
        }
    }

    let imat = structure.matrix();
    let mut i_compatible = ConditionOutcome::pass();
    let itol = tol * imat.amax().max(1.0);
    'compat: for xi in 0..d {
        for &v1 in &vertical {
            for &v2 in &vertical {
                let lhs: f64 = (0..d).map(|m| imat[(m, xi)] * form.get(m, v1, v2)).sum();
                let rhs: f64 = (0..d).map(|m| form.get(xi, v1, m) * imat[(m, v2)]).sum();
                let defect = lhs + rhs;
                if defect.abs() > itol {
                    i_compatible =
                        ConditionOutcome::fail(Witness::Incompatible { xi, v1, v2, defect });
                    break 'compat;
                }
            }
        }
    }

    Ok(ValidationReport {
        closed: Applicability::NotApplicable,
        one_horizontal,
        fiberwise_nondegenerate,
        i_compatible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn standard_form_value_on_p1_q1_e2() {
        let space = SplitSpace::new(1).unwrap();
        let form = AlternatingThreeForm::standard(space);
        let d = space.dim();
        let v = form
            .evaluate(&unit(d, space.b1(0)), &unit(d, space.a1(0)), &unit(d, 1))
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn zero_form_evaluates_to_zero() {
        let space = SplitSpace::new(2).unwrap();
        let form = AlternatingThreeForm::zeros(space);
        let u: Vec<f64> = (0..space.dim()).map(|i| i as f64 + 0.5).collect();
        assert_eq!(form.evaluate(&u, &u, &u).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let space = SplitSpace::new(1).unwrap();
        let form = AlternatingThreeForm::standard(space);
        let err = form.evaluate(&[1.0; 5], &[1.0; 6], &[1.0; 6]).unwrap_err();
        assert_eq!(
            err,
            LinalgError::DimensionMismatch {
                expected: 6,
                got: 5
            }
        );
    }

    #[test]
    fn sqrt_of_scaled_identity_and_diagonal() {
        let s = matrix_sqrt_spd(&(DMatrix::identity(4, 4) * 4.0)).unwrap();
        assert!((s.matrix() - DMatrix::identity(4, 4) * 2.0).amax() < 1e-14);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 9.0, 16.0]));
        let s = matrix_sqrt_spd(&m).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]));
        assert!((s.matrix() - expect).amax() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_bad_inputs() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(
            matrix_sqrt_spd(&m),
            Err(LinalgError::NotSymmetric(_))
        ));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 2.0]));
        assert!(matches!(
            matrix_sqrt_spd(&m),
            Err(LinalgError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn standard_structure_is_valid() {
        for n in 1..=4 {
            let space = SplitSpace::new(n).unwrap();
            let i = LinearComplexStructure::standard(space);
            LinearComplexStructure::new(space, i.matrix().clone()).unwrap();
            let coupling = i.coupling();
            let lhs = &coupling * i.base_part();
            let rhs = i.fiber_part() * &coupling;
            assert!((lhs + rhs).amax() < TAU_ALG);
        }
    }

    #[test]
    fn complex_structure_rejects_upper_block() {
        let space = SplitSpace::new(1).unwrap();
        let mut m = LinearComplexStructure::standard(space).matrix().clone();
        m[(0, 3)] = 1.0;
        assert!(matches!(
            LinearComplexStructure::new(space, m),
            Err(LinalgError::NotLowerTriangular(_))
        ));
    }

    #[test]
    fn standard_pair_matches_contractions() {
        let space = SplitSpace::new(2).unwrap();
        let form = AlternatingThreeForm::standard(space);
        let d = space.dim();
        let (w1, w2) = standard_crps_matrices(2);
        let omega1 = form.vertical_contraction(&unit(d, 1)).unwrap();
        let omega2 = -form.vertical_contraction(&unit(d, 0)).unwrap();
        assert_eq!(omega1, w1);
        assert_eq!(omega2, w2);
        let ifib = standard_fiber_structure(2);
        assert!((&w2 + &w1 * &ifib).amax() == 0.0);
    }

    #[test]
    fn validate_standard_passes() {
        for n in 1..=4 {
            let space = SplitSpace::new(n).unwrap();
            let report = validate_crms(
                &AlternatingThreeForm::standard(space),
                &LinearComplexStructure::standard(space),
            )
            .unwrap();
            assert!(report.all_passed(), "n = {n}: {report:?}");
            assert_eq!(report.closed, Applicability::NotApplicable);
        }
    }

    #[test]
    fn zero_form_is_degenerate() {
        let space = SplitSpace::new(1).unwrap();
        let report = validate_crms(
            &AlternatingThreeForm::zeros(space),
            &LinearComplexStructure::standard(space),
        )
        .unwrap();
        assert!(!report.fiberwise_nondegenerate.passed);
        assert!(report.one_horizontal.passed);
    }

    #[test]
    fn vertical_triple_is_reported() {
        let space = SplitSpace::new(1).unwrap();
        let mut form = AlternatingThreeForm::standard(space);
        form.set(2, 3, 4, 1.0);
        let value = form
            .evaluate(&unit(6, 2), &unit(6, 3), &unit(6, 4))
            .unwrap();
        assert_eq!(value, 1.0);
        let report = validate_crms(&form, &LinearComplexStructure::standard(space)).unwrap();
        assert_eq!(
            report.one_horizontal.witness,
            Some(Witness::VerticalTriple {
                indices: [2, 3, 4],
                value: 1.0
            })
        );
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let form = AlternatingThreeForm::standard(SplitSpace::new(1).unwrap());
        let i = LinearComplexStructure::standard(SplitSpace::new(2).unwrap());
        assert!(validate_crms(&form, &i).is_err());
    }

    #[test]
    fn bad_fiber_dims() {
        assert!(SplitSpace::from_fiber_dim(6).is_err());
        assert!(SplitSpace::from_fiber_dim(0).is_err());
        assert_eq!(SplitSpace::from_fiber_dim(8).unwrap().dim(), 10);
    }
}
