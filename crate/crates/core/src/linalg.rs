use nalgebra::{Matrix3, SymmetricEigen};

/// Condition number above which a 3x3 normal or Fisher matrix is treated as
/// singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Spectral condition number of a symmetric matrix; infinite when the
/// smallest eigenvalue is not positive.
pub fn symmetric_condition(m: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*m).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a symmetric positive-definite matrix, or its condition number
/// when it is too close to singular.
pub fn checked_spd_inverse(m: &Matrix3<f64>) -> Result<Matrix3<f64>, f64> {
    let cond = symmetric_condition(m);
    if !(cond < CONDITION_LIMIT) {
        return Err(cond);
    }
    m.cholesky().map(|c| c.inverse()).ok_or(cond)
}
