use nalgebra::{Matrix3, Vector3};

use super::EstimateReport;
use crate::error::{Error, Result};
use crate::geometry::{AngleMeasurementSet, Point3};
use crate::linalg::checked_spd_inverse;

const TANGENT_EPS: f64 = 1e-9;

/// Rows of the tangent-form pseudolinear system, one azimuth and one
/// elevation row per sensor: `(coefficients, rhs)`.
pub(crate) fn pseudolinear_rows(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
) -> Result<Vec<(Vector3<f64>, f64)>> {
    if measurements.len() != uavs.len() {
        return Err(Error::LengthMismatch {
            measurements: measurements.len(),
            uavs: uavs.len(),
        });
    }
    let mut rows = Vec::with_capacity(2 * uavs.len());
    for (i, (pair, u)) in measurements.pairs().iter().zip(uavs).enumerate() {
        let (st, ct) = pair.azimuth().sin_cos();
        let cp = pair.elevation().cos();
        if ct.abs() < TANGENT_EPS || cp.abs() < TANGENT_EPS {
            return Err(Error::TangentSingularity { sensor: i });
        }
        let tt = st / ct;
        let tp = pair.elevation().tan();
        rows.push((Vector3::new(tt, -1.0, 0.0), tt * u.x - u.y));
        let a = Vector3::new(tp * ct, tp * st, -1.0);
        rows.push((a, a.dot(&u.to_vector())));
    }
    Ok(rows)
}

/// Conventional pseudolinear least squares built from the unnormalized
/// tangent-form plane equations.
pub fn conventional_ls_estimate(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
) -> Result<EstimateReport> {
    let rows = pseudolinear_rows(measurements, uavs)?;
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for (a, b) in &rows {
        ata += a * a.transpose();
        atb += a * *b;
    }
    let inv = checked_spd_inverse(&ata).map_err(|condition| Error::RankDeficient { condition })?;
    let u = Point3::from_vector(&(inv * atb));
    if !u.is_finite() {
        return Err(Error::NonFinite("conventional LS solution"));
    }
    Ok(EstimateReport::closed_form(u))
}
