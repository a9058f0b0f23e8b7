use num_complex::Complex64;

use super::FieldError;

/// A sample point `(t, q, P)` of a chart, with momenta `(P₁ᵃ, P₂ᵃ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPoint {
    pub t: Complex64,
    pub q: Vec<Complex64>,
    pub momenta: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    /// Largest Cauchy–Riemann defect over all components of the transition.
    pub max_defect: f64,
    /// Largest defect of the transformed momenta alone.
    pub momentum_defect: f64,
    /// Transformed momenta `(S₁ᵃ, S₂ᵃ)` at each point.
    pub momenta: Vec<Vec<[f64; 2]>>,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `½(∂ₓ − i∂ᵧ)f` with central differences of step `h`.
fn complex_derivative(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Complex64 {
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    0.5 * (dx - I * dy)
}

/// `½(∂ₓ + i∂ᵧ)f` with central differences of step `h`.
fn cr_defect(f: &dyn Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> f64 {
    let dx = (f(z + h) - f(z - h)) / (2.0 * h);
    let dy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    (0.5 * (dx + I * dy)).norm()
}

/// Discrete Cauchy–Riemann defect of the induced transition
/// `(t, q, π) ↦ (ψ(t), φₐ(qₐ), ψ′(t)/φₐ′(qₐ)·πₐ)` with `πₐ = P₁ᵃ − iP₂ᵃ`.
///
/// Derivatives of `ψ` and `φₐ` are themselves central differences of step
/// `h`, so for holomorphic maps the defect is `O(h²)`.
pub fn transition_check<C, F>(
    chart: C,
    fiber: F,
    points: &[TransitionPoint],
    h: f64,
) -> Result<TransitionReport, FieldError>
where
    C: Fn(Complex64) -> Complex64,
    F: Fn(usize, Complex64) -> Complex64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(FieldError::BadGrid(format!("step {h} must be positive")));
    }
    let mut max_defect = 0.0_f64;
    let mut momentum_defect = 0.0_f64;
    let mut momenta = Vec::with_capacity(points.len());
    for p in points {
        if p.q.len() != p.momenta.len() {
            return Err(FieldError::ShapeMismatch(format!(
                "{} fiber coordinates but {} momenta",
                p.q.len(),
                p.momenta.len()
            )));
        }
        let chart_fn = |t: Complex64| chart(t);
        max_defect = max_defect.max(cr_defect(&chart_fn, p.t, h));
        let mut transformed = Vec::with_capacity(p.q.len());
        for (a, (&q, &[p1, p2])) in p.q.iter().zip(&p.momenta).enumerate() {
            let fiber_fn = |z: Complex64| fiber(a, z);
            let pi = Complex64::new(p1, -p2);
            let s = |t: Complex64, q: Complex64, pi: Complex64| {
                complex_derivative(&chart_fn, t, h) / complex_derivative(&fiber_fn, q, h) * pi
            };
            let s0 = s(p.t, q, pi);
            transformed.push([s0.re, -s0.im]);

            let mut d = cr_defect(&|t| s(t, q, pi), p.t, h);
            d = d.max(cr_defect(&|z| s(p.t, z, pi), q, h));
            d = d.max(cr_defect(&|w| s(p.t, q, w), pi, h));
            momentum_defect = momentum_defect.max(d);
            max_defect = max_defect.max(d).max(cr_defect(&fiber_fn, q, h));
        }
        momenta.push(transformed);
    }
    if !max_defect.is_finite() {
        return Err(FieldError::NonFinite);
    }
    Ok(TransitionReport {
        max_defect,
        momentum_defect,
        momenta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(n: usize) -> Vec<TransitionPoint> {
        let mut out = Vec::new();
        for k in 0..8 {
            let angle = std::f64::consts::TAU * k as f64 / 8.0;
            let t = Complex64::from_polar(1.0, angle);
            let q = (0..n)
                .map(|a| Complex64::new(0.25 * a as f64 - 0.125, 0.375 * (k % 3) as f64))
                .collect();
            let momenta = (0..n)
                .map(|a| [1.0 + a as f64, 0.5 - k as f64 * 0.125])
                .collect();
            out.push(TransitionPoint { t, q, momenta });
        }
        out
    }

    #[test]
    fn identity_maps_have_zero_defect() {
        let pts: Vec<_> = points(2)
            .into_iter()
            .map(|mut p| {
                p.t = Complex64::new(0.5, -0.75);
                p
            })
            .collect();
        let r = transition_check(|t| t, |_, q| q, &pts, 2f64.powi(-6)).unwrap();
        assert_eq!(r.max_defect, 0.0);
        for (p, s) in pts.iter().zip(&r.momenta) {
            assert_eq!(&p.momenta, s);
        }
    }

    #[test]
    fn antiholomorphic_chart_is_flagged() {
        let r = transition_check(|t: Complex64| t.conj(), |_, q| q, &points(1), 1e-3).unwrap();
        assert!((r.max_defect - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_chart_defect_is_second_order() {
        let pts = points(1);
        let coarse = transition_check(|t| t * t, |_, q: Complex64| q.exp(), &pts, 0.02).unwrap();
        let fine = transition_check(|t| t * t, |_, q: Complex64| q.exp(), &pts, 0.01).unwrap();
        let ratio = coarse.momentum_defect / fine.momentum_defect;
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }
}
