use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::FieldError;
use crate::samples::rng_from_seed;

pub type ValueFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync>;

pub const GRADIENT_CHECK_POINTS: usize = 8;
pub const GRADIENT_CHECK_RTOL: f64 = 1e-5;
const GRADIENT_CHECK_SEED: u64 = 0x4852_4144;
const GRADIENT_CHECK_STEP: f64 = 1e-5;

pub const BUILTIN_NAMES: [&str; 5] = ["zero", "quadratic_p", "quadratic", "quartic", "cosine"];

/// A Hamiltonian density `H(t₁, t₂, z)` together with its fiber gradient.
#[derive(Clone)]
pub struct HamiltonianSpec {
    name: String,
    parameters: BTreeMap<String, f64>,
    fiber_dim: usize,
    value: ValueFn,
    gradient: GradientFn,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("name", &self.name)
            .field("parameters", &self.parameters)
            .field("fiber_dim", &self.fiber_dim)
            .finish_non_exhaustive()
    }
}

impl HamiltonianSpec {
    /// Build and check the gradient against central differences of the value
    /// at seeded sample points in `[0,2π)² × [−1,1]^fiber_dim`.
    pub fn new(
        name: impl Into<String>,
        parameters: BTreeMap<String, f64>,
        fiber_dim: usize,
        value: ValueFn,
        gradient: GradientFn,
    ) -> Result<Self, FieldError> {
        let spec = Self::new_unchecked(name, parameters, fiber_dim, value, gradient);
        spec.check_gradient()?;
        Ok(spec)
    }

    /// Build without the finite-difference check.
    pub fn new_unchecked(
        name: impl Into<String>,
        parameters: BTreeMap<String, f64>,
        fiber_dim: usize,
        value: ValueFn,
        gradient: GradientFn,
    ) -> Self {
        Self {
            name: name.into(),
            parameters,
            fiber_dim,
            value,
            gradient,
        }
    }

    fn check_gradient(&self) -> Result<(), FieldError> {
        let d = self.fiber_dim;
        let mut rng = rng_from_seed(GRADIENT_CHECK_SEED);
        let mut g = vec![0.0; d];
        for sample in 0..GRADIENT_CHECK_POINTS {
            let t1 = rng.gen_range(0.0..TAU);
            let t2 = rng.gen_range(0.0..TAU);
            let mut z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (self.gradient)(t1, t2, &z, &mut g);
            let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            for c in 0..d {
                let z0 = z[c];
                z[c] = z0 + GRADIENT_CHECK_STEP;
                let fp = (self.value)(t1, t2, &z);
                z[c] = z0 - GRADIENT_CHECK_STEP;
                let fm = (self.value)(t1, t2, &z);
                z[c] = z0;
                let fd = (fp - fm) / (2.0 * GRADIENT_CHECK_STEP);
                let relative_error = (fd - g[c]).abs() / scale;
                if relative_error.is_nan() || relative_error >= GRADIENT_CHECK_RTOL {
                    return Err(FieldError::GradientMismatch {
                        name: self.name.clone(),
                        sample,
                        component: c,
                        relative_error,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn value(&self, t1: f64, t2: f64, z: &[f64]) -> f64 {
        (self.value)(t1, t2, z)
    }

    pub fn gradient_into(&self, t1: f64, t2: f64, z: &[f64], out: &mut [f64]) {
        (self.gradient)(t1, t2, z, out)
    }

    pub fn gradient(&self, t1: f64, t2: f64, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.fiber_dim];
        self.gradient_into(t1, t2, z, &mut out);
        out
    }

    /// Same value, gradient scaled by `factor`: a deliberately inconsistent
    /// pair for negative controls.
    pub fn with_scaled_gradient(&self, factor: f64) -> Self {
        let gradient = Arc::clone(&self.gradient);
        let mut parameters = self.parameters.clone();
        parameters.insert("gradient_scale".into(), factor);
        Self::new_unchecked(
            format!("{}_corrupted", self.name),
            parameters,
            self.fiber_dim,
            Arc::clone(&self.value),
            Arc::new(move |t1, t2, z, out| {
                gradient(t1, t2, z, out);
                out.iter_mut().for_each(|v| *v *= factor);
            }),
        )
    }

    /// A built-in Bridges Hamiltonian on `4n` fiber coordinates, gradient
    /// checked as in [`HamiltonianSpec::new`]; `lambda` defaults to 1 where
    /// it applies.
    ///
    /// * `zero`: `0`
    /// * `quadratic_p`: `½|P|²`
    /// * `quadratic`: `½|P|² + ½λ|q|²`
    /// * `quartic`: `½|P|² + λ Σ (qⱼᵃ)⁴`
    /// * `cosine`: `½|P|² + λ Σ cos qⱼᵃ`
    pub fn builtin(
        name: &str,
        n: usize,
        parameters: &BTreeMap<String, f64>,
    ) -> Result<Self, FieldError> {
        let takes_lambda = match name {
            "zero" | "quadratic_p" => false,
            "quadratic" | "quartic" | "cosine" => true,
            _ => return Err(FieldError::UnknownHamiltonian(name.to_string())),
        };
        for key in parameters.keys() {
            if !(takes_lambda && key == "lambda") {
                return Err(FieldError::BadParameters(format!(
                    "{name} does not take parameter {key:?}"
                )));
            }
        }
        if n == 0 {
            return Err(FieldError::BadParameters("n must be positive".into()));
        }
        let lambda = parameters.get("lambda").copied().unwrap_or(1.0);
        if !lambda.is_finite() {
            return Err(FieldError::BadParameters("lambda must be finite".into()));
        }
        let spec = match name {
            "zero" => Self::zero(4 * n),
            "quadratic_p" => Self::quadratic_p(n),
            "quadratic" => Self::quadratic(n, lambda),
            "quartic" => Self::quartic(n, lambda),
            _ => Self::cosine(n, lambda),
        };
        spec.check_gradient()?;
        Ok(spec)
    }

    pub fn zero(fiber_dim: usize) -> Self {
        Self::new_unchecked(
            "zero",
            BTreeMap::new(),
            fiber_dim,
            Arc::new(|_, _, _| 0.0),
            Arc::new(|_, _, _, out| out.fill(0.0)),
        )
    }

    /// `½|P|²`.
    pub fn quadratic_p(n: usize) -> Self {
        Self::kinetic_plus("quadratic_p", n, None, |_, _| (0.0, 0.0))
    }

    /// `½|P|² + ½λ|q|²`.
    pub fn quadratic(n: usize, lambda: f64) -> Self {
        Self::kinetic_plus("quadratic", n, Some(lambda), move |q, _| {
            (0.5 * lambda * q * q, lambda * q)
        })
    }

    /// `½|P|² + λ Σ q⁴`.
    pub fn quartic(n: usize, lambda: f64) -> Self {
        Self::kinetic_plus("quartic", n, Some(lambda), move |q, _| {
            let q2 = q * q;
            (lambda * q2 * q2, 4.0 * lambda * q2 * q)
        })
    }

    /// `½|P|² + λ Σ cos q`.
    pub fn cosine(n: usize, lambda: f64) -> Self {
        Self::kinetic_plus("cosine", n, Some(lambda), move |q, _| {
            (lambda * q.cos(), -lambda * q.sin())
        })
    }

    /// `½|P|² + Σ V(qⱼᵃ)` for a potential given as `q ↦ (V, V′)`.
    fn kinetic_plus(
        name: &str,
        n: usize,
        lambda: Option<f64>,
        potential: impl Fn(f64, usize) -> (f64, f64) + Send + Sync + Clone + 'static,
    ) -> Self {
        let mut parameters = BTreeMap::new();
        if let Some(lambda) = lambda {
            parameters.insert("lambda".to_string(), lambda);
        }
        let pv = potential.clone();
        Self::new_unchecked(
            name,
            parameters,
            4 * n,
            Arc::new(move |_, _, z| {
                crate::sum::compensated_sum(z.chunks_exact(4).enumerate().flat_map(|(a, b)| {
                    [
                        pv(b[0], a).0,
                        pv(b[1], a).0,
                        0.5 * b[2] * b[2],
                        0.5 * b[3] * b[3],
                    ]
                }))
            }),
            Arc::new(move |_, _, z, out| {
                for (a, (b, o)) in z.chunks_exact(4).zip(out.chunks_exact_mut(4)).enumerate() {
                    o[0] = potential(b[0], a).1;
                    o[1] = potential(b[1], a).1;
                    o[2] = b[2];
                    o[3] = b[3];
                }
            }),
        )
    }

    /// `½ Σ ((p₁ᵃ)² + (p₂ᵃ)²)` on De Donder–Weyl fibers `(qᵃ, p₁ᵃ, p₂ᵃ)`.
    pub fn ddw_quadratic_momenta(n: usize) -> Self {
        Self::new_unchecked(
            "ddw_quadratic_momenta",
            BTreeMap::new(),
            3 * n,
            Arc::new(|_, _, z| {
                crate::sum::compensated_sum(
                    z.chunks_exact(3)
                        .flat_map(|b| [0.5 * b[1] * b[1], 0.5 * b[2] * b[2]]),
                )
            }),
            Arc::new(|_, _, z, out| {
                for (b, o) in z.chunks_exact(3).zip(out.chunks_exact_mut(3)) {
                    o[0] = 0.0;
                    o[1] = b[1];
                    o[2] = b[2];
                }
            }),
        )
    }
}
