use nalgebra::{DMatrix, Vector3};

use super::{EstimateReport, NormalSystem};
use crate::error::{Error, Result};
use crate::geometry::{PlaneSet, Point3};

/// Sum of squared point-plane distances.
pub fn msd_cost(planes: &PlaneSet, u: &Point3) -> f64 {
    let v = u.to_vector();
    planes.iter().map(|p| p.residual(&v).powi(2)).sum()
}

/// Minimum-squared-distance least squares: the point minimizing
/// `sum_i (a_i . u - b_i)^2`, from the 3x3 normal equations.
pub fn msd_ls_estimate(planes: &PlaneSet) -> Result<EstimateReport> {
    let system = NormalSystem::assemble(planes)?;
    let u = Point3::from_vector(&system.solve_shifted(&Vector3::zeros()));
    if !u.is_finite() {
        return Err(Error::NonFinite("MSD-LS solution"));
    }
    Ok(EstimateReport::closed_form(u))
}

/// Total-least-squares variant: the right singular vector of the smallest
/// singular value of `[A | b]`, dehomogenized. Offsets are re-expressed
/// relative to the UAV centroid first so the result does not depend on
/// where the coordinate origin sits, and divided by the RMS UAV distance
/// from that centroid so the offset column is dimensionless like the
/// normals.
pub fn msd_tls_estimate(planes: &PlaneSet) -> Result<EstimateReport> {
    // rank check on A alone
    NormalSystem::assemble(planes)?;

    let uavs = planes.uavs();
    let centroid = uavs.iter().fold(Point3::ORIGIN, |acc, u| acc + *u) * (1.0 / uavs.len() as f64);
    let c = centroid.to_vector();
    let scale = (uavs.iter().map(|u| (*u - centroid).norm_squared()).sum::<f64>() / uavs.len() as f64).sqrt();
    if !(scale > 0.0) {
        return Err(Error::DegenerateTls(scale));
    }

    let rows = 2 * planes.sensor_count();
    let mut aug = DMatrix::<f64>::zeros(rows, 4);
    for (i, p) in planes.iter().enumerate() {
        aug[(i, 0)] = p.normal.x;
        aug[(i, 1)] = p.normal.y;
        aug[(i, 2)] = p.normal.z;
        aug[(i, 3)] = (p.offset - p.normal.dot(&c)) / scale;
    }
    let svd = aug.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::NonFinite("TLS singular vectors"))?;
    let (smallest, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::EmptyInput("TLS system"))?;
    let v = v_t.row(smallest);
    // [a, b'/s] . [u; -1/s] = 0, so u is v[..3] / -(v[3] / s)
    if v[3].abs() < 1e-12 {
        return Err(Error::DegenerateTls(v[3]));
    }
    let h = v[3] / scale;
    let u = Point3::new(-v[0] / h, -v[1] / h, -v[2] / h) + centroid;
    if !u.is_finite() {
        return Err(Error::NonFinite("MSD-TLS solution"));
    }
    Ok(EstimateReport::closed_form(u))
}
