//! Small dense linear algebra: refined complex solves, the matrix exponential,
//! Kronecker sums and polynomial least squares.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;
use num_traits::Zero;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Condition estimates above this are treated as numerically singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Result of [`solve_refined`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: CVector,
    /// 1-norm condition number ‖A‖₁‖A⁻¹‖₁.
    pub condition: f64,
    /// ‖A x − rhs‖₂ / ‖rhs‖₂ (absolute residual when `rhs` is zero).
    pub relative_residual: f64,
}

/// Failure of [`solve_refined`]. `weakest_column` is the unknown whose pivot
/// was smallest in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSystem {
    pub condition: f64,
    pub weakest_column: usize,
}

pub fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// LU solve with partial pivoting followed by `refinement_steps` rounds of
/// iterative refinement.
pub fn solve_refined(
    a: &CMatrix,
    rhs: &CVector,
    refinement_steps: usize,
) -> core::result::Result<Solution, SingularSystem> {
    let lu = a.clone().lu();
    let u = lu.u();
    let weakest_column = (0..u.nrows())
        .min_by(|&i, &j| u[(i, i)].norm().total_cmp(&u[(j, j)].norm()))
        .unwrap_or(0);
    let singular = |condition| SingularSystem {
        condition,
        weakest_column,
    };

    let mut x = lu.solve(rhs).ok_or(singular(f64::INFINITY))?;
    for _ in 0..refinement_steps {
        let r = rhs - a * &x;
        match lu.solve(&r) {
            Some(dx) => x += dx,
            None => break,
        }
    }
    let inverse = lu.try_inverse().ok_or(singular(f64::INFINITY))?;
    let condition = one_norm(a) * one_norm(&inverse);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(singular(condition));
    }
    let residual = vec_norm(&(a * &x - rhs));
    let scale = vec_norm(rhs);
    let relative_residual = if scale > 0.0 {
        residual / scale
    } else {
        residual
    };
    Ok(Solution {
        x,
        condition,
        relative_residual,
    })
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Kronecker sum `a ⊗ I + I ⊗ a` acting on row-major vectorised matrices,
/// i.e. the generator of `X ↦ a X + X aᵀ`.
pub fn kron_sum(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut out = CMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..n {
            let row = j * n + k;
            for l in 0..n {
                out[(row, l * n + k)] += a[(j, l)];
                out[(row, j * n + l)] += a[(k, l)];
            }
        }
    }
    out
}

/// Least-squares polynomial fit, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// Ratio of extreme singular values of the Vandermonde matrix built on
    /// the abscissae rescaled to [-1, 1].
    pub condition: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> PolyFit {
    let n = x.len();
    let cols = degree + 1;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let vander = DMatrix::<f64>::from_fn(n, cols, |i, j| (x[i] / scale).powi(j as i32));
    let rhs = DVector::<f64>::from_column_slice(y);
    let svd = vander.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let coef = svd
        .solve(&rhs, smax * 1e-15)
        .unwrap_or_else(|_| DVector::zeros(cols));
    let residual_norm = (&vander * &coef - &rhs).norm();
    let coefficients = coef
        .iter()
        .enumerate()
        .map(|(j, c)| c / scale.powi(j as i32))
        .collect();
    PolyFit {
        coefficients,
        residual_norm,
        condition,
    }
}

pub(crate) fn czero() -> Complex64 {
    Complex64::zero()
}
