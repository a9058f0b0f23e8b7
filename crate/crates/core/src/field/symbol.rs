use nalgebra::DMatrix;
use serde::Serialize;

use super::FieldError;

/// Relative singular-value threshold for the kernel dimension.
pub const KERNEL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    Ddw,
    Bridges,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolReport {
    pub covector: [f64; 2],
    pub operator_tag: OperatorTag,
    pub symbol_matrix: DMatrix<f64>,
    pub kernel_dim: usize,
    pub determinant: f64,
}

/// Principal symbol of the first-order part of the residual operators,
/// `∂ᵢ ↦ ξᵢ`, rows and columns in fiber order.
pub fn principal_symbol(
    operator_tag: OperatorTag,
    xi: [f64; 2],
    n: usize,
) -> Result<SymbolReport, FieldError> {
    if xi[0] == 0.0 && xi[1] == 0.0 {
        return Err(FieldError::ZeroCovector);
    }
    if !(xi[0].is_finite() && xi[1].is_finite()) {
        return Err(FieldError::NonFinite);
    }
    if n == 0 {
        return Err(FieldError::ShapeMismatch("n must be positive".into()));
    }
    let [x1, x2] = xi;
    let (block, size): (Vec<[f64; 4]>, usize) = match operator_tag {
        OperatorTag::Bridges => (
            vec![
                [0.0, 0.0, x1, -x2],
                [0.0, 0.0, x2, x1],
                [-x1, -x2, 0.0, 0.0],
                [x2, -x1, 0.0, 0.0],
            ],
            4,
        ),
        OperatorTag::Ddw => (
            vec![
                [0.0, x1, x2, 0.0],
                [-x1, 0.0, 0.0, 0.0],
                [-x2, 0.0, 0.0, 0.0],
            ],
            3,
        ),
    };
    let dim = size * n;
    let mut m = DMatrix::zeros(dim, dim);
    for a in 0..n {
        for (r, row) in block.iter().enumerate() {
            for c in 0..size {
                m[(a * size + r, a * size + c)] = row[c];
            }
        }
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let kernel_dim = sv.iter().filter(|s| **s < KERNEL_RTOL * smax).count();
    let determinant = m.clone().lu().determinant();
    Ok(SymbolReport {
        covector: xi,
        operator_tag,
        symbol_matrix: m,
        kernel_dim,
        determinant,
    })
}
