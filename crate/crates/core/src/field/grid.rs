use std::f64::consts::TAU;

use super::FieldError;

/// Uniform periodic grid on the flat torus `[0,l₁) × [0,l₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
}

impl TorusGrid {
    pub const MIN_POINTS: usize = 4;

    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self, FieldError> {
        if n1 < Self::MIN_POINTS || n2 < Self::MIN_POINTS {
            return Err(FieldError::BadGrid(format!(
                "resolution {n1}x{n2} below {}",
                Self::MIN_POINTS
            )));
        }
        if !(l1 > 0.0 && l1.is_finite() && l2 > 0.0 && l2.is_finite()) {
            return Err(FieldError::BadGrid(format!(
                "periods {l1}, {l2} must be positive"
            )));
        }
        Ok(Self { n1, n2, l1, l2 })
    }

    /// `n1 × n2` grid with both periods `2π`.
    pub fn square(n1: usize, n2: usize) -> Result<Self, FieldError> {
        Self::new(n1, n2, TAU, TAU)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn h1(&self) -> f64 {
        self.l1 / self.n1 as f64
    }

    pub fn h2(&self) -> f64 {
        self.l2 / self.n2 as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.h1() * self.h2()
    }

    pub fn points(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn t1(&self, i: usize) -> f64 {
        i as f64 * self.h1()
    }

    pub fn t2(&self, j: usize) -> f64 {
        j as f64 * self.h2()
    }
}

/// How the fiber coordinates at each grid point are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberLayout {
    /// `(q₁ᵃ, q₂ᵃ, P₁ᵃ, P₂ᵃ)` for `a = 1..n`, fiber dimension `4n`.
    Bridges { n: usize },
    /// `(qᵃ, p₁ᵃ, p₂ᵃ)` for `a = 1..n`, fiber dimension `3n`.
    DeDonderWeyl { n: usize },
}

impl FiberLayout {
    pub fn n(&self) -> usize {
        match *self {
            FiberLayout::Bridges { n } | FiberLayout::DeDonderWeyl { n } => n,
        }
    }

    pub fn fiber_dim(&self) -> usize {
        match *self {
            FiberLayout::Bridges { n } => 4 * n,
            FiberLayout::DeDonderWeyl { n } => 3 * n,
        }
    }
}

/// Grid function with values in the fiber, stored row-major as
/// `(i, j, component)` with `i` along `t₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: TorusGrid,
    layout: FiberLayout,
    values: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: TorusGrid, layout: FiberLayout) -> Self {
        Self {
            grid,
            layout,
            values: vec![0.0; grid.points() * layout.fiber_dim()],
        }
    }

    pub fn from_values(
        grid: TorusGrid,
        layout: FiberLayout,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let expected = grid.points() * layout.fiber_dim();
        if values.len() != expected {
            return Err(FieldError::ShapeMismatch(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        if layout.n() == 0 {
            return Err(FieldError::ShapeMismatch("empty fiber".into()));
        }
        Ok(Self {
            grid,
            layout,
            values,
        })
    }

    /// Sample `f(t₁, t₂, component)` at every grid point.
    pub fn from_fn(
        grid: TorusGrid,
        layout: FiberLayout,
        f: impl Fn(f64, f64, usize) -> f64,
    ) -> Self {
        let fd = layout.fiber_dim();
        let mut values = Vec::with_capacity(grid.points() * fd);
        for i in 0..grid.n1() {
            for j in 0..grid.n2() {
                for c in 0..fd {
                    values.push(f(grid.t1(i), grid.t2(j), c));
                }
            }
        }
        Self {
            grid,
            layout,
            values,
        }
    }

    pub fn constant(
        grid: TorusGrid,
        layout: FiberLayout,
        fiber: &[f64],
    ) -> Result<Self, FieldError> {
        if fiber.len() != layout.fiber_dim() {
            return Err(FieldError::ShapeMismatch(format!(
                "fiber vector has {} entries, layout needs {}",
                fiber.len(),
                layout.fiber_dim()
            )));
        }
        Ok(Self::from_fn(grid, layout, |_, _, c| fiber[c]))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn layout(&self) -> FiberLayout {
        self.layout
    }

    pub fn fiber_dim(&self) -> usize {
        self.layout.fiber_dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.grid.n2() + j) * self.fiber_dim()
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.values[o..o + self.fiber_dim()]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = self.offset(i, j);
        let fd = self.fiber_dim();
        &mut self.values[o..o + fd]
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[self.offset(i, j) + c]
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<(), FieldError> {
        if self.grid != other.grid || self.layout != other.layout {
            return Err(FieldError::ShapeMismatch(
                "grid or fiber layout differ".into(),
            ));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, FieldError> {
        self.check_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            layout: self.layout,
            values,
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            layout: self.layout,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// Grid `L²` pairing `h₁h₂ Σ u·v` with the Euclidean fiber product.
    pub fn dot(&self, other: &Self) -> Result<f64, FieldError> {
        self.check_same_shape(other)?;
        let s =
            crate::sum::compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b));
        Ok(s * self.grid.cell_area())
    }
}
