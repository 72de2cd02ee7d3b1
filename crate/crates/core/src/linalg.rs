//! Small dense helpers on top of nalgebra: condition numbers, Sylvester-type
//! solves by Kronecker vectorization, numeric rank.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::series::{CMatrix, Complex};

/// 2-norm condition number via singular values (`inf` when singular).
pub fn condition(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numeric rank: singular values above `rel_tol * σ_max`.
pub fn rank(m: &CMatrix, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Column-stacking `vec(X)`.
pub fn vectorize(x: &CMatrix) -> DVector<Complex> {
    DVector::from_iterator(x.len(), x.iter().cloned())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &DVector<Complex>, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_iterator(rows, cols, v.iter().cloned())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Solve `s·X·B − A·X = Y` for `X` (all constant matrices), the shape of
/// every per-coefficient equation in block-triangular gauge problems.
pub fn solve_sylvester(s: Complex, a: &CMatrix, b: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    let (r, c) = (a.nrows(), b.nrows());
    let ia = CMatrix::identity(r, r);
    let ib = CMatrix::identity(c, c);
    // vec(X B) = (Bᵀ ⊗ I) vec X,  vec(A X) = (I ⊗ A) vec X.
    let op = kron(&b.transpose(), &ia) * s - kron(&ib, a);
    let lu = op.lu();
    let x = lu
        .solve(&vectorize(y))
        .ok_or_else(|| Error::LinearSolveSingular("sylvester operator".into()))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::LinearSolveSingular("sylvester operator".into()));
    }
    Ok(unvectorize(&x, r, c))
}

/// Integer matrix power (negative powers invert first).
pub fn matrix_pow(m: &CMatrix, e: i64) -> Result<CMatrix> {
    let base = if e < 0 {
        m.clone()
            .try_inverse()
            .ok_or(Error::LinearSolveSingular("matrix power".into()))?
    } else {
        m.clone()
    };
    let mut acc = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..e.unsigned_abs() {
        acc = &acc * &base;
    }
    Ok(acc)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Least-squares fit `y ≈ a x² + b x + c`, returned as `[a, b, c]`.
pub fn quadratic_fit(points: &[(f64, f64)]) -> Result<[f64; 3]> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(
            "a quadratic fit needs at least 3 points".into(),
        ));
    }
    let design = nalgebra::DMatrix::from_fn(points.len(), 3, |i, j| points[i].0.powi(2 - j as i32));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::LinearSolveSingular(e.to_string()))?;
    Ok([sol[0], sol[1], sol[2]])
}
