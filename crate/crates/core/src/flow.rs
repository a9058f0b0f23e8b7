//! Negative gradient flow `∂ₛZ = −grad 𝒜(Z)` of the discrete action.
//!
//! The flow equation is the Fueter equation on `ℝ × 𝕋²`; its stationary
//! states solve the Bridges equations. Steps are fixed-size explicit Euler
//! or classical Runge–Kutta.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compatible::CompatibleTriple;
use crate::field::{
    action, gradient_pairing, gradient_with, l2_gradient, FieldError, FieldState, HamiltonianSpec,
    Stencil, TorusGrid,
};

pub const DEFAULT_GRAD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite values produced")]
    NonFinite,
    #[error("flow diverged at step {step}")]
    Divergence { step: usize },
    #[error("trajectory has {0} states, at least 3 are needed")]
    TooShort(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ExplicitEuler,
    Rk4,
}

impl Integrator {
    /// `κ` in the step bound `ds ≤ κ·min(h₁, h₂)`.
    pub fn stability_constant(self) -> f64 {
        match self {
            Integrator::ExplicitEuler => 0.2,
            Integrator::Rk4 => 0.5,
        }
    }

    pub fn max_step(self, grid: &TorusGrid) -> f64 {
        self.stability_constant() * grid.h1().min(grid.h2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConfig {
    ds: f64,
    max_steps: usize,
    grad_tolerance: f64,
    integrator: Integrator,
    record_every: usize,
}

impl FlowConfig {
    pub fn new(
        grid: &TorusGrid,
        ds: f64,
        max_steps: usize,
        grad_tolerance: f64,
        integrator: Integrator,
        record_every: usize,
    ) -> Result<Self, FlowError> {
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(FlowError::InvalidConfig(format!(
                "ds = {ds} must be positive"
            )));
        }
        let bound = integrator.max_step(grid);
        if ds > bound {
            return Err(FlowError::InvalidConfig(format!(
                "ds = {ds} exceeds the stability bound {bound} of {integrator:?}"
            )));
        }
        if !(grad_tolerance > 0.0 && grad_tolerance.is_finite()) {
            return Err(FlowError::InvalidConfig(format!(
                "grad_tolerance = {grad_tolerance} must be positive"
            )));
        }
        if record_every == 0 {
            return Err(FlowError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(Self {
            ds,
            max_steps,
            grad_tolerance,
            integrator,
            record_every,
        })
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn grad_tolerance(&self) -> f64 {
        self.grad_tolerance
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub step: usize,
    pub s: f64,
    pub action: f64,
    /// Sup norm of the gradient.
    pub grad_norm: f64,
    /// `L²` norm of the gradient in the triple's metric.
    pub grad_l2: f64,
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub steps: Vec<FlowRecord>,
    pub final_state: FieldState,
    pub converged: bool,
}

impl FlowTrace {
    pub fn final_record(&self) -> &FlowRecord {
        self.steps
            .last()
            .expect("a trace records its initial state")
    }

    /// RFC 4180 table with columns `step, s, action, grad_norm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FieldError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "s", "action", "grad_norm"])?;
        for r in &self.steps {
            w.write_record([
                r.step.to_string(),
                r.s.to_string(),
                r.action.to_string(),
                r.grad_norm.to_string(),
            ])?;
        }
        w.flush().map_err(FieldError::Io)?;
        Ok(())
    }
}

fn checked(state: FieldState) -> Result<FieldState, FlowError> {
    if state.is_finite() {
        Ok(state)
    } else {
        Err(FlowError::NonFinite)
    }
}

/// One step of `Z ← Z − ds·grad 𝒜(Z)` by the chosen integrator.
pub fn flow_step(
    state: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
    ds: f64,
    integrator: Integrator,
) -> Result<FieldState, FlowError> {
    let rhs = |z: &FieldState| -> Result<FieldState, FlowError> {
        let g = l2_gradient(z, h, triple)?;
        checked(g)
    };
    let next = match integrator {
        Integrator::ExplicitEuler => state.axpy(-ds, &rhs(state)?)?,
        Integrator::Rk4 => {
            let k1 = rhs(state)?;
            let k2 = rhs(&state.axpy(-0.5 * ds, &k1)?)?;
            let k3 = rhs(&state.axpy(-0.5 * ds, &k2)?)?;
            let k4 = rhs(&state.axpy(-ds, &k3)?)?;
            let mut out = state.clone();
            for ((((o, a), b), c), d) in out
                .values_mut()
                .iter_mut()
                .zip(k1.values())
                .zip(k2.values())
                .zip(k3.values())
                .zip(k4.values())
            {
                *o -= ds / 6.0 * (a + 2.0 * b + 2.0 * c + d);
            }
            out
        }
    };
    checked(next)
}

fn record(
    step: usize,
    s: f64,
    state: &FieldState,
    grad: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
) -> Result<FlowRecord, FlowError> {
    Ok(FlowRecord {
        step,
        s,
        action: action(state, h)?,
        grad_norm: grad.sup_norm(),
        grad_l2: gradient_pairing(grad, grad, triple)?.max(0.0).sqrt(),
    })
}

/// Integrate until `‖grad‖∞ < grad_tolerance` or `max_steps` steps.
///
/// Every `record_every`-th step is recorded, together with the initial and
/// final states.
pub fn run_flow(
    initial: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
    config: &FlowConfig,
) -> Result<FlowTrace, FlowError> {
    let ds = config.ds;
    let mut state = initial.clone();
    if !state.is_finite() {
        return Err(FlowError::Divergence { step: 0 });
    }
    let mut grad = l2_gradient(&state, h, triple)?;
    let mut steps = vec![record(0, 0.0, &state, &grad, h, triple)?];
    let mut converged = grad.sup_norm() < config.grad_tolerance;
    let mut k = 0;
    while !converged && k < config.max_steps {
        state = flow_step(&state, h, triple, ds, config.integrator).map_err(|e| match e {
            FlowError::NonFinite => FlowError::Divergence { step: k + 1 },
            other => other,
        })?;
        k += 1;
        grad = l2_gradient(&state, h, triple)?;
        if !grad.is_finite() {
            return Err(FlowError::Divergence { step: k });
        }
        converged = grad.sup_norm() < config.grad_tolerance;
        if converged || k % config.record_every == 0 || k == config.max_steps {
            steps.push(record(k, k as f64 * ds, &state, &grad, h, triple)?);
        }
    }
    Ok(FlowTrace {
        steps,
        final_state: state,
        converged,
    })
}

/// The states `Z₀, …, Z_steps` of a fixed-step integration.
pub fn trajectory(
    initial: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
    ds: f64,
    integrator: Integrator,
    steps: usize,
) -> Result<Vec<FieldState>, FlowError> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    for k in 0..steps {
        let next = flow_step(&out[k], h, triple, ds, integrator).map_err(|e| match e {
            FlowError::NonFinite => FlowError::Divergence { step: k + 1 },
            other => other,
        })?;
        out.push(next);
    }
    Ok(out)
}

/// `sup | I (∂ₛZ + J₁∂₁Z + J₂∂₂Z − g⁻¹∇H) |` over interior trajectory states.
///
/// `∂ₛ` is the central difference in `s`; the spatial derivatives use the
/// fourth-order stencil, so the value measures consistency with the
/// continuum Fueter operator rather than with the flow's own discretization.
pub fn fueter_residual(
    trajectory: &[FieldState],
    ds: f64,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
) -> Result<f64, FlowError> {
    if trajectory.len() < 3 {
        return Err(FlowError::TooShort(trajectory.len()));
    }
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(FlowError::InvalidConfig(format!(
            "ds = {ds} must be positive"
        )));
    }
    let f = trajectory[0].fiber_dim();
    let i_fiber = triple.i_fiber.transpose();
    let i_rows = i_fiber.as_slice();
    let mut sup = 0.0_f64;
    for k in 1..trajectory.len() - 1 {
        let mut w = gradient_with(&trajectory[k], h, triple, Stencil::Fourth)?;
        let ds_term = trajectory[k + 1].axpy(-1.0, &trajectory[k - 1])?;
        w = w.axpy(1.0 / (2.0 * ds), &ds_term)?;
        for z in w.values().chunks_exact(f) {
            for r in 0..f {
                let v: f64 = (0..f).map(|c| i_rows[r * f + c] * z[c]).sum();
                sup = sup.max(v.abs());
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::sync::Arc;

    use super::*;
    use crate::compatible::standard_triple;
    use crate::field::{bridges_residual, FiberLayout};

    fn smooth(grid: TorusGrid, amplitude: f64) -> FieldState {
        FieldState::from_fn(grid, FiberLayout::Bridges { n: 1 }, |t1, t2, c| {
            let c = c as f64;
            amplitude * ((t1 + 0.3 * c).sin() + 0.5 * (2.0 * t2 - c).cos() + 0.25 * (t1 - t2).sin())
        })
    }

    /// `H = −½c|Z|²`: the action's Hessian is `K + c·Id`, positive once `c`
    /// exceeds the spectral radius of the derivative part.
    fn confining(c: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(
            "confining",
            BTreeMap::from([("c".to_string(), c)]),
            4,
            Arc::new(move |_, _, z| -0.5 * c * z.iter().map(|v| v * v).sum::<f64>()),
            Arc::new(move |_, _, z, out| {
                for (o, v) in out.iter_mut().zip(z) {
                    *o = -c * v;
                }
            }),
        )
        .unwrap()
    }

    #[test]
    fn config_rejects_large_steps() {
        let grid = TorusGrid::square(32, 32).unwrap();
        let bound = Integrator::ExplicitEuler.max_step(&grid);
        assert!(FlowConfig::new(&grid, bound, 10, 1e-8, Integrator::ExplicitEuler, 1).is_ok());
        assert!(matches!(
            FlowConfig::new(&grid, 10.0 * bound, 10, 1e-8, Integrator::ExplicitEuler, 1),
            Err(FlowError::InvalidConfig(_))
        ));
        assert!(FlowConfig::new(&grid, bound, 10, 0.0, Integrator::Rk4, 1).is_err());
        assert!(FlowConfig::new(&grid, bound, 10, 1e-8, Integrator::Rk4, 0).is_err());
    }

    #[test]
    fn critical_state_is_fixed() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::quadratic(1, 1.0);
        let zero = FieldState::zeros(grid, FiberLayout::Bridges { n: 1 });
        for integrator in [Integrator::ExplicitEuler, Integrator::Rk4] {
            assert_eq!(flow_step(&zero, &h, &t, 0.1, integrator).unwrap(), zero);
        }
        let cfg = FlowConfig::new(&grid, 0.1, 100, 1e-8, Integrator::ExplicitEuler, 1).unwrap();
        let trace = run_flow(&zero, &h, &t, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn euler_step_is_state_minus_ds_gradient() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::cosine(1, 1.0);
        let z = FieldState::constant(grid, FiberLayout::Bridges { n: 1 }, &[0.4, -0.2, 0.0, 0.0])
            .unwrap();
        let next = flow_step(&z, &h, &t, 0.01, Integrator::ExplicitEuler).unwrap();
        let expected = z.axpy(-0.01, &l2_gradient(&z, &h, &t).unwrap()).unwrap();
        assert_eq!(next, expected);
    }

    #[test]
    fn euler_step_decreases_the_action() {
        use rand::Rng;
        let grid = TorusGrid::square(16, 16).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::quartic(1, 0.5);
        let ds = Integrator::ExplicitEuler.max_step(&grid);
        for seed in 0..5 {
            let mut rng = crate::samples::rng_from_seed(seed);
            let values = (0..grid.points() * 4)
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect();
            let z = FieldState::from_values(grid, FiberLayout::Bridges { n: 1 }, values).unwrap();
            let next = flow_step(&z, &h, &t, ds, Integrator::ExplicitEuler).unwrap();
            assert!(action(&next, &h).unwrap() < action(&z, &h).unwrap());
        }
    }

    #[test]
    fn energy_identity_at_half_bound() {
        let grid = TorusGrid::square(16, 16).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::quadratic(1, 1.0);
        let ds = 0.5 * Integrator::ExplicitEuler.max_step(&grid);
        let cfg = FlowConfig::new(&grid, ds, 40, 1e-12, Integrator::ExplicitEuler, 1).unwrap();
        let trace = run_flow(&smooth(grid, 0.1), &h, &t, &cfg).unwrap();
        let drop = trace.steps[0].action - trace.final_record().action;
        let dissipated: f64 = trace.steps[..trace.steps.len() - 1]
            .iter()
            .map(|r| ds * r.grad_l2 * r.grad_l2)
            .sum();
        assert!(drop >= 0.8 * dissipated, "{drop} vs {dissipated}");
    }

    #[test]
    fn runs_are_deterministic() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::cosine(1, 0.5);
        let cfg = FlowConfig::new(&grid, 0.05, 30, 1e-10, Integrator::Rk4, 1).unwrap();
        let a = run_flow(&smooth(grid, 0.2), &h, &t, &cfg).unwrap();
        let b = run_flow(&smooth(grid, 0.2), &h, &t, &cfg).unwrap();
        let bits = |tr: &FlowTrace| {
            tr.steps
                .iter()
                .map(|r| r.action.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn converged_states_solve_the_bridges_equations() {
        let grid = TorusGrid::square(32, 32).unwrap();
        let t = standard_triple(1);
        let h = confining(10.0);
        let ds = Integrator::ExplicitEuler.max_step(&grid);
        let cfg = FlowConfig::new(&grid, ds, 20_000, 1e-8, Integrator::ExplicitEuler, 50).unwrap();
        let trace = run_flow(&smooth(grid, 0.1), &h, &t, &cfg).unwrap();
        assert!(trace.converged);
        let r = bridges_residual(&trace.final_state, &h).unwrap().sup_norm();
        assert!(r < 10.0 * cfg.grad_tolerance());
        assert!(trace.final_state.sup_norm() < 1e-9);
    }

    #[test]
    fn fueter_residual_of_a_stationary_trajectory_vanishes() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        let z = FieldState::zeros(grid, FiberLayout::Bridges { n: 1 });
        let h = HamiltonianSpec::quadratic(1, 1.0);
        assert_eq!(
            fueter_residual(&[z.clone(), z.clone(), z.clone()], 0.1, &h, &t).unwrap(),
            0.0
        );
        assert!(matches!(
            fueter_residual(&[z.clone(), z], 0.1, &h, &t),
            Err(FlowError::TooShort(2))
        ));
    }

    #[test]
    fn divergence_reports_the_step() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        // The constant mode of ½|q|² grows like e^s under descent.
        let h = HamiltonianSpec::quadratic(1, 1.0);
        let z = FieldState::constant(grid, FiberLayout::Bridges { n: 1 }, &[1.0; 4]).unwrap();
        let ds = Integrator::ExplicitEuler.max_step(&grid);
        let cfg =
            FlowConfig::new(&grid, ds, 1_000_000, 1e-8, Integrator::ExplicitEuler, 1000).unwrap();
        match run_flow(&z, &h, &t, &cfg) {
            Err(FlowError::Divergence { step }) => assert!(step > 1000),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn trace_csv_columns() {
        let grid = TorusGrid::square(8, 8).unwrap();
        let t = standard_triple(1);
        let h = HamiltonianSpec::quadratic_p(1);
        let cfg = FlowConfig::new(&grid, 0.1, 3, 1e-12, Integrator::ExplicitEuler, 1).unwrap();
        let trace = run_flow(&smooth(grid, 0.1), &h, &t, &cfg).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,s,action,grad_norm\n0,0,"));
        assert_eq!(text.lines().count(), 5);
    }
}
