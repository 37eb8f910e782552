//! Dense least squares through the normal equations.

use crate::matrix::Matrix;

/// Relative pivot floor below which a Gram matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-10;
pub const RIDGE_LAMBDA: f64 = 1e-6;

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` when
/// a pivot falls below `PIVOT_TOL` times the largest diagonal entry.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_TOL * scale) {
            return None;
        }
        let d = libm::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ X = B` column by column.
pub fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// `p × q` coefficients for `p` predictors and `q` targets.
    pub coef: Matrix,
    /// Ridge penalty that had to be added (0 when the plain solve worked).
    pub ridge: f64,
}

/// Minimises `‖X·B − Y‖²`. A singular Gram matrix is regularised with
/// `RIDGE_LAMBDA`, growing tenfold until the factorisation succeeds.
pub fn least_squares(x: &Matrix, y: &Matrix) -> LeastSquares {
    debug_assert_eq!(x.rows(), y.rows());
    let gram = x.transposed_matmul(x).expect("row counts agree");
    let rhs = x.transposed_matmul(y).expect("row counts agree");
    let mut ridge = 0.0;
    loop {
        let mut a = gram.clone();
        for i in 0..a.rows() {
            a[(i, i)] += ridge;
        }
        if let Some(l) = cholesky(&a) {
            return LeastSquares {
                coef: cholesky_solve(&l, &rhs),
                ridge,
            };
        }
        ridge = if ridge == 0.0 { RIDGE_LAMBDA } else { ridge * 10.0 };
    }
}
