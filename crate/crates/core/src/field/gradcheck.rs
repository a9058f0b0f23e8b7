use rand::Rng;
use serde::Serialize;

use super::{action, gradient_pairing, l2_gradient, FieldError, FieldState, HamiltonianSpec};
use crate::compatible::CompatibleTriple;
use crate::samples::rng_from_seed;

/// Finite-difference steps of the Richardson table, coarsest first.
pub const RICHARDSON_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// `d/dε 𝒜(Z + εδ)` at `ε = 0` from central differences at
/// [`RICHARDSON_STEPS`], with the `ε²` and `ε⁴` error terms eliminated.
pub fn richardson_derivative(
    state: &FieldState,
    h: &HamiltonianSpec,
    direction: &FieldState,
) -> Result<f64, FieldError> {
    let mut central = [0.0; 3];
    for (slot, eps) in central.iter_mut().zip(RICHARDSON_STEPS) {
        let plus = action(&state.axpy(eps, direction)?, h)?;
        let minus = action(&state.axpy(-eps, direction)?, h)?;
        *slot = (plus - minus) / (2.0 * eps);
    }
    // Steps shrink by 10, so the ε² and ε⁴ terms shrink by 100 and 10⁴.
    let r1 = (100.0 * central[1] - central[0]) / 99.0;
    let r2 = (100.0 * central[2] - central[1]) / 99.0;
    Ok((1e4 * r2 - r1) / (1e4 - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub directions: usize,
    pub seed: u64,
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
}

/// Compare `⟨grad 𝒜, δ⟩` against Richardson-extrapolated directional
/// derivatives of the action over seeded uniform directions.
pub fn gradient_check(
    state: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
    directions: usize,
    seed: u64,
) -> Result<GradientCheck, FieldError> {
    let grad = l2_gradient(state, h, triple)?;
    let mut rng = rng_from_seed(seed);
    let mut relative_errors = Vec::with_capacity(directions);
    for _ in 0..directions {
        let values = (0..state.values().len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let delta = FieldState::from_values(*state.grid(), state.layout(), values)?;
        let predicted = gradient_pairing(&grad, &delta, triple)?;
        let measured = richardson_derivative(state, h, &delta)?;
        relative_errors.push((predicted - measured).abs() / (predicted.abs() + 1e-30));
    }
    let max_relative_error = relative_errors.iter().fold(0.0, |m: f64, v| m.max(*v));
    Ok(GradientCheck {
        directions,
        seed,
        relative_errors,
        max_relative_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compatible::standard_triple;
    use crate::field::{FiberLayout, TorusGrid};

    #[test]
    fn richardson_is_exact_on_quartics() {
        // Along a constant line the action is a quartic in ε.
        let grid = TorusGrid::square(4, 4).unwrap();
        let z = FieldState::constant(grid, FiberLayout::Bridges { n: 1 }, &[0.5, 0.0, 0.0, 0.0])
            .unwrap();
        let d = FieldState::constant(grid, FiberLayout::Bridges { n: 1 }, &[1.0, 0.0, 0.0, 0.0])
            .unwrap();
        let h = HamiltonianSpec::quartic(1, 1.0);
        let got = richardson_derivative(&z, &h, &d).unwrap();
        let expected = -4.0 * 0.125 * grid.l1() * grid.l2();
        assert!((got - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let state = FieldState::from_fn(grid, FiberLayout::Bridges { n: 1 }, |t1, t2, c| {
            0.3 * (t1 + c as f64).sin() * t2.cos()
        });
        let t = standard_triple(1);
        let good = HamiltonianSpec::cosine(1, 1.0);
        assert!(
            gradient_check(&state, &good, &t, 4, 1)
                .unwrap()
                .max_relative_error
                < 1e-8
        );
        let bad = good.with_scaled_gradient(1.1);
        assert!(
            gradient_check(&state, &bad, &t, 4, 1)
                .unwrap()
                .max_relative_error
                > 1e-4
        );
    }
}
