//! Fisher information and Cramér-Rao lower bound for the Gaussian
//! azimuth/elevation measurement model.
//!
//! The information matrix is `sum_m g_theta g_theta^T / s2_theta +
//! g_phi g_phi^T / s2_phi`, with `g` the rows of [`angle_jacobian`](crate::geometry::angle_jacobian). Written
//! out per sensor this has, e.g., the (1,1) entry
//! `sin^2 theta / (d^2 cos^2 phi) / s2_theta + sin^2 phi cos^2 theta / d^2 / s2_phi`.
//! The bound is its inverse and therefore scales linearly with the noise
//! variance.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::estimators::NoiseSpec;
use crate::geometry::{jacobian_for_sensor, Point3};
use crate::linalg::{checked_spd_inverse, symmetric_condition};

/// Fisher information matrix, 1/m^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherInfo(pub Matrix3<f64>);

impl FisherInfo {
    pub fn condition(&self) -> f64 {
        symmetric_condition(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbResult {
    /// Lower bound on the position error covariance, m^2.
    pub bound: Matrix3<f64>,
    /// Trace of `bound`, m^2.
    pub trace: f64,
}

impl CrlbResult {
    pub fn trace_db(&self) -> f64 {
        10.0 * self.trace.log10()
    }
}

pub fn fisher_information(source: &Point3, uavs: &[Point3], noise: &NoiseSpec) -> Result<FisherInfo> {
    if uavs.len() < 2 {
        return Err(Error::InsufficientSensors(uavs.len()));
    }
    if !(noise.sigma2_theta > 0.0) {
        return Err(Error::ZeroNoise("sigma2_theta must be > 0"));
    }
    if !(noise.sigma2_phi > 0.0) {
        return Err(Error::ZeroNoise("sigma2_phi must be > 0"));
    }
    let (wt, wp) = (1.0 / noise.sigma2_theta, 1.0 / noise.sigma2_phi);
    let mut f = Matrix3::zeros();
    for (i, uav) in uavs.iter().enumerate() {
        let (_, j) = jacobian_for_sensor(source, uav, i)?;
        let gt = j.azimuth_row();
        let gp = j.elevation_row();
        f += gt * gt.transpose() * wt + gp * gp.transpose() * wp;
    }
    Ok(FisherInfo(f))
}

pub fn crlb(source: &Point3, uavs: &[Point3], noise: &NoiseSpec) -> Result<CrlbResult> {
    let fim = fisher_information(source, uavs, noise)?;
    let bound =
        checked_spd_inverse(&fim.0).map_err(|condition| Error::SingularFisher { condition })?;
    Ok(CrlbResult {
        bound,
        trace: bound.trace(),
    })
}
