use super::{FiberLayout, FieldError, FieldState, HamiltonianSpec};
use crate::compatible::CompatibleTriple;
use crate::sum::compensated_sum;

/// Base direction of a discrete derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    T1,
    T2,
}

/// Periodic difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(i+1) − f(i−1)) / 2h`, skew-adjoint; used by the action.
    Second,
    /// `(−f(i+2) + 8f(i+1) − 8f(i−1) + f(i−2)) / 12h`.
    Fourth,
}

/// Periodic centered difference `(f(i+1) − f(i−1)) / 2h` along `axis`.
pub fn diff(state: &FieldState, axis: Axis) -> FieldState {
    diff_with(state, axis, Stencil::Second)
}

pub fn diff_with(state: &FieldState, axis: Axis, stencil: Stencil) -> FieldState {
    let grid = *state.grid();
    let (n1, n2) = (grid.n1(), grid.n2());
    let h = match axis {
        Axis::T1 => grid.h1(),
        Axis::T2 => grid.h2(),
    };
    let shifted = |i: usize, j: usize, k: isize| -> &[f64] {
        match axis {
            Axis::T1 => state.at((i as isize + k).rem_euclid(n1 as isize) as usize, j),
            Axis::T2 => state.at(i, (j as isize + k).rem_euclid(n2 as isize) as usize),
        }
    };
    let mut out = FieldState::zeros(grid, state.layout());
    for i in 0..n1 {
        for j in 0..n2 {
            let o = out.at_mut(i, j);
            match stencil {
                Stencil::Second => {
                    let inv = 1.0 / (2.0 * h);
                    for ((o, p), m) in o.iter_mut().zip(shifted(i, j, 1)).zip(shifted(i, j, -1)) {
                        *o = (p - m) * inv;
                    }
                }
                Stencil::Fourth => {
                    let inv = 1.0 / (12.0 * h);
                    let (p2, p1, m1, m2) = (
                        shifted(i, j, 2),
                        shifted(i, j, 1),
                        shifted(i, j, -1),
                        shifted(i, j, -2),
                    );
                    for (c, o) in o.iter_mut().enumerate() {
                        *o = (8.0 * (p1[c] - m1[c]) - (p2[c] - m2[c])) * inv;
                    }
                }
            }
        }
    }
    out
}

fn require_bridges(state: &FieldState, h: &HamiltonianSpec) -> Result<(), FieldError> {
    if !matches!(state.layout(), FiberLayout::Bridges { .. }) {
        return Err(FieldError::ShapeMismatch(
            "operation needs a Bridges fiber layout".into(),
        ));
    }
    require_fiber(state, h)
}

fn require_fiber(state: &FieldState, h: &HamiltonianSpec) -> Result<(), FieldError> {
    if h.fiber_dim() != state.fiber_dim() {
        return Err(FieldError::ShapeMismatch(format!(
            "hamiltonian {:?} acts on {} coordinates, state has {}",
            h.name(),
            h.fiber_dim(),
            state.fiber_dim()
        )));
    }
    Ok(())
}

/// `∇H` sampled at every grid point.
fn hamiltonian_gradient(state: &FieldState, h: &HamiltonianSpec) -> FieldState {
    let grid = *state.grid();
    let mut out = FieldState::zeros(grid, state.layout());
    for i in 0..grid.n1() {
        for j in 0..grid.n2() {
            h.gradient_into(grid.t1(i), grid.t2(j), state.at(i, j), out.at_mut(i, j));
        }
    }
    out
}

/// Discrete action `h₁h₂ Σ [θ₁(∂₁Z) + θ₂(∂₂Z) − H]` with
/// `θ₁ = Σ P₁dq₁ + P₂dq₂` and `θ₂ = Σ P₁dq₂ − P₂dq₁`.
pub fn action(state: &FieldState, h: &HamiltonianSpec) -> Result<f64, FieldError> {
    require_bridges(state, h)?;
    let grid = *state.grid();
    let d1 = diff(state, Axis::T1);
    let d2 = diff(state, Axis::T2);
    let mut terms = Vec::with_capacity(grid.points() * (state.layout().n() + 1));
    for i in 0..grid.n1() {
        for j in 0..grid.n2() {
            let z = state.at(i, j);
            for ((b, e1), e2) in z
                .chunks_exact(4)
                .zip(d1.at(i, j).chunks_exact(4))
                .zip(d2.at(i, j).chunks_exact(4))
            {
                terms.push(b[2] * e1[0] + b[3] * e1[1] + b[2] * e2[1] - b[3] * e2[0]);
            }
            terms.push(-h.value(grid.t1(i), grid.t2(j), z));
        }
    }
    Ok(compensated_sum(terms) * grid.cell_area())
}

/// Residual of the Bridges equations, per block
///
/// ```text
/// r_q₁ = H_q₁ + ∂₁P₁ − ∂₂P₂     r_P₁ = H_P₁ − ∂₁q₁ − ∂₂q₂
/// r_q₂ = H_q₂ + ∂₁P₂ + ∂₂P₁     r_P₂ = H_P₂ − ∂₁q₂ + ∂₂q₁
/// ```
pub fn bridges_residual(state: &FieldState, h: &HamiltonianSpec) -> Result<FieldState, FieldError> {
    require_bridges(state, h)?;
    let d1 = diff(state, Axis::T1);
    let d2 = diff(state, Axis::T2);
    let mut r = hamiltonian_gradient(state, h);
    for ((o, e1), e2) in r
        .values_mut()
        .chunks_exact_mut(4)
        .zip(d1.values().chunks_exact(4))
        .zip(d2.values().chunks_exact(4))
    {
        o[0] += e1[2] - e2[3];
        o[1] += e1[3] + e2[2];
        o[2] += -e1[0] - e2[1];
        o[3] += -e1[1] + e2[0];
    }
    Ok(r)
}

/// Residual of the De Donder–Weyl equations on fibers `(qᵃ, p₁ᵃ, p₂ᵃ)`:
/// `r_q = H_q + ∂₁p₁ + ∂₂p₂`, `r_p₁ = H_p₁ − ∂₁q`, `r_p₂ = H_p₂ − ∂₂q`.
pub fn ddw_residual(state: &FieldState, h: &HamiltonianSpec) -> Result<FieldState, FieldError> {
    if !matches!(state.layout(), FiberLayout::DeDonderWeyl { .. }) {
        return Err(FieldError::ShapeMismatch(
            "operation needs a De Donder-Weyl fiber layout".into(),
        ));
    }
    require_fiber(state, h)?;
    let d1 = diff(state, Axis::T1);
    let d2 = diff(state, Axis::T2);
    let mut r = hamiltonian_gradient(state, h);
    for ((o, e1), e2) in r
        .values_mut()
        .chunks_exact_mut(3)
        .zip(d1.values().chunks_exact(3))
        .zip(d2.values().chunks_exact(3))
    {
        o[0] += e1[1] + e2[2];
        o[1] -= e1[0];
        o[2] -= e2[0];
    }
    Ok(r)
}

fn check_triple(state: &FieldState, triple: &CompatibleTriple) -> Result<(), FieldError> {
    if triple.dim() != state.fiber_dim() {
        return Err(FieldError::ShapeMismatch(format!(
            "triple acts on {} coordinates, state has {}",
            triple.dim(),
            state.fiber_dim()
        )));
    }
    Ok(())
}

fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// `J₁∂₁Z + J₂∂₂Z − g⁻¹∇H`, the gradient of [`action`] for the metric `g`.
///
/// Exact for the standard triple, whose `g J₁`, `g J₂` are the exterior
/// derivatives of the θ-forms used by [`action`].
pub fn l2_gradient(
    state: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
) -> Result<FieldState, FieldError> {
    gradient_with(state, h, triple, Stencil::Second)
}

/// [`l2_gradient`] with the spatial derivatives taken by `stencil`.
pub fn gradient_with(
    state: &FieldState,
    h: &HamiltonianSpec,
    triple: &CompatibleTriple,
    stencil: Stencil,
) -> Result<FieldState, FieldError> {
    require_bridges(state, h)?;
    check_triple(state, triple)?;
    let f = state.fiber_dim();
    let j1 = row_major(&triple.j1);
    let j2 = row_major(&triple.j2);
    let gi = row_major(&triple.g_inverse);
    let d1 = diff_with(state, Axis::T1, stencil);
    let d2 = diff_with(state, Axis::T2, stencil);
    let dh = hamiltonian_gradient(state, h);
    let mut out = FieldState::zeros(*state.grid(), state.layout());
    for (((o, e1), e2), g) in out
        .values_mut()
        .chunks_exact_mut(f)
        .zip(d1.values().chunks_exact(f))
        .zip(d2.values().chunks_exact(f))
        .zip(dh.values().chunks_exact(f))
    {
        for (r, slot) in o.iter_mut().enumerate() {
            let row = r * f..(r + 1) * f;
            let mut acc = 0.0;
            for (c, ((a, b), m)) in j1[row.clone()]
                .iter()
                .zip(&j2[row.clone()])
                .zip(&gi[row])
                .enumerate()
            {
                acc += a * e1[c] + b * e2[c] - m * g[c];
            }
            *slot = acc;
        }
    }
    Ok(out)
}

/// `h₁h₂ Σ g(u, v)`: the grid inner product the gradient is taken in.
pub fn gradient_pairing(
    u: &FieldState,
    v: &FieldState,
    triple: &CompatibleTriple,
) -> Result<f64, FieldError> {
    u.check_same_shape(v)?;
    check_triple(u, triple)?;
    let f = u.fiber_dim();
    let g = row_major(triple.g.matrix());
    let terms = u
        .values()
        .chunks_exact(f)
        .zip(v.values().chunks_exact(f))
        .flat_map(|(a, b)| {
            let g = &g;
            (0..f).flat_map(move |r| (0..f).map(move |c| a[r] * g[r * f + c] * b[c]))
        });
    Ok(compensated_sum(terms) * u.grid().cell_area())
}

/// Replace the momenta by the solution of `r_P = 0` for a Hamiltonian with
/// `∂H/∂P = P`: `P₁ = ∂₁q₁ + ∂₂q₂`, `P₂ = ∂₁q₂ − ∂₂q₁`.
pub fn eliminate_momenta(state: &FieldState) -> Result<FieldState, FieldError> {
    if !matches!(state.layout(), FiberLayout::Bridges { .. }) {
        return Err(FieldError::ShapeMismatch(
            "operation needs a Bridges fiber layout".into(),
        ));
    }
    let d1 = diff(state, Axis::T1);
    let d2 = diff(state, Axis::T2);
    let mut out = state.clone();
    for ((o, e1), e2) in out
        .values_mut()
        .chunks_exact_mut(4)
        .zip(d1.values().chunks_exact(4))
        .zip(d2.values().chunks_exact(4))
    {
        o[2] = e1[0] + e2[1];
        o[3] = e1[1] - e2[0];
    }
    Ok(out)
}
