//! Seeded generators for random CRMS/CRPS data and smooth fields.
//!
//! Everything here is driven by a caller-supplied RNG so that experiments
//! are reproducible from a single `u64` seed (see [`rng_from_seed`]).

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::{FiberLayout, FieldState, TorusGrid};
use crate::linalg::{
    standard_crps_matrices, standard_fiber_structure, AlternatingThreeForm, LinearComplexStructure,
    SpdMatrix, SplitSpace,
};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn uniform_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Orthogonal projection of `m` onto matrices commuting with `i` (`i² = −Id`).
pub fn commuting_part(m: &DMatrix<f64>, i: &DMatrix<f64>) -> DMatrix<f64> {
    (m - i * m * i) * 0.5
}

/// Random invertible matrix on `ℝ^{4n}` commuting with the standard fiber
/// structure: identity plus a scaled complex-linear perturbation.
pub fn random_complex_linear<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let f = 4 * n;
    let ifib = standard_fiber_structure(n);
    let scale = 0.9 / (f as f64).sqrt();
    let m = commuting_part(&uniform_matrix(rng, f, f), &ifib) * scale;
    DMatrix::identity(f, f) + m
}

/// Random block-lower-triangular invertible map on `T ⊕ V` commuting with
/// the standard complex structure.
pub fn random_commuting_frame<R: Rng>(rng: &mut R, space: SplitSpace) -> DMatrix<f64> {
    let d = space.dim();
    let istd = LinearComplexStructure::standard(space).matrix().clone();
    let mut m = commuting_part(&uniform_matrix(rng, d, d), &istd) * (0.9 / (d as f64).sqrt());
    m.view_mut((0, 2), (2, space.dim_fiber())).fill(0.0);
    m + DMatrix::identity(d, d)
}

/// Random block-lower-triangular invertible map with no complex-linearity.
///
/// Conjugating the standard pair by such a map produces a complex structure
/// with nonzero coupling block and nonstandard base and fiber parts.
pub fn random_lower_frame<R: Rng>(rng: &mut R, space: SplitSpace) -> DMatrix<f64> {
    let d = space.dim();
    let mut m = uniform_matrix(rng, d, d) * (0.9 / (d as f64).sqrt());
    m.view_mut((0, 2), (2, space.dim_fiber())).fill(0.0);
    m + DMatrix::identity(d, d)
}

/// A CRMS form, its complex structure, and the data used to build it.
#[derive(Debug, Clone)]
pub struct RandomCrms {
    pub form: AlternatingThreeForm,
    pub structure: LinearComplexStructure,
    pub frame: DMatrix<f64>,
    pub mu: Vec<f64>,
}

/// `(Ω_std + μ∧ε₁∧ε₂)` pulled back by a random commuting frame, with
/// structure `I_std`.
pub fn random_commuting_crms<R: Rng>(rng: &mut R, space: SplitSpace) -> RandomCrms {
    let frame = random_commuting_frame(rng, space);
    let mu = uniform_vector(rng, space.dim_fiber());
    let mut base = AlternatingThreeForm::standard(space);
    base.add_nu_term(&mu).expect("mu has fiber length");
    let form = base.pullback(&frame).expect("frame is square");
    RandomCrms {
        form,
        structure: LinearComplexStructure::standard(space),
        frame,
        mu,
    }
}

/// Same as [`random_commuting_crms`] but with a generic lower frame, so the
/// structure is `F⁻¹ I_std F`.
pub fn random_general_crms<R: Rng>(rng: &mut R, space: SplitSpace) -> RandomCrms {
    let frame = random_lower_frame(rng, space);
    let mu = uniform_vector(rng, space.dim_fiber());
    let mut base = AlternatingThreeForm::standard(space);
    base.add_nu_term(&mu).expect("mu has fiber length");
    let form = base.pullback(&frame).expect("frame is square");
    let structure = LinearComplexStructure::standard(space)
        .conjugate(&frame)
        .expect("lower frame is invertible");
    RandomCrms {
        form,
        structure,
        frame,
        mu,
    }
}

/// Random compatible pair `(ω₁, ω₂) = (Pᵀ W₁ P, Pᵀ W₂ P)` for a random
/// complex-linear `P`, returned with `P`.
pub fn random_crps_pair<R: Rng>(
    rng: &mut R,
    n: usize,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = random_complex_linear(rng, n);
    let (w1, w2) = standard_crps_matrices(n);
    let o1 = p.transpose() * w1 * &p;
    let o2 = p.transpose() * w2 * &p;
    (o1, o2, p)
}

/// Random inner product compatible with the standard fiber structure.
pub fn random_compatible_reference<R: Rng>(rng: &mut R, n: usize) -> SpdMatrix {
    let r = random_complex_linear(rng, n);
    SpdMatrix::new(r.transpose() * r).expect("RᵀR with invertible R is SPD")
}

/// Truncated random Fourier series: every mode `|k₁|, |k₂| ≤ max_mode` of
/// every fiber component gets uniform cosine and sine coefficients, and the
/// result is scaled to sup norm `amplitude`.
///
/// Coefficients are drawn before sampling, so one seed gives the same
/// continuum function on every grid of the same periods.
pub fn random_smooth_state<R: Rng>(
    rng: &mut R,
    grid: TorusGrid,
    layout: FiberLayout,
    amplitude: f64,
    max_mode: i32,
) -> FieldState {
    let modes: Vec<(f64, f64)> = (-max_mode..=max_mode)
        .flat_map(|k1| (-max_mode..=max_mode).map(move |k2| (k1 as f64, k2 as f64)))
        .collect();
    let coeffs: Vec<Vec<(f64, f64)>> = (0..layout.fiber_dim())
        .map(|_| {
            modes
                .iter()
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    let (w1, w2) = (TAU / grid.l1(), TAU / grid.l2());
    let raw = FieldState::from_fn(grid, layout, |t1, t2, c| {
        modes
            .iter()
            .zip(&coeffs[c])
            .map(|(&(k1, k2), &(a, b))| {
                let phase = k1 * w1 * t1 + k2 * w2 * t2;
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    });
    let sup = raw.sup_norm();
    if sup == 0.0 {
        raw
    } else {
        raw.scaled(amplitude / sup)
    }
}
