use nalgebra::{Matrix3, Vector3};

use super::{EstimateReport, NoiseSpec};
use crate::error::{Error, Result};
use crate::geometry::{jacobian_for_sensor, wrap_angle, AngleMeasurementSet, Point3};
use crate::linalg::checked_spd_inverse;

const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the accepted step is shorter than this, meters.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 50,
            tolerance: 1e-9,
        }
    }
}

fn weights(noise: &NoiseSpec) -> Result<(f64, f64)> {
    if !(noise.sigma2_theta > 0.0) {
        return Err(Error::ZeroNoise("sigma2_theta must be > 0 for MLE weighting"));
    }
    if !(noise.sigma2_phi > 0.0) {
        return Err(Error::ZeroNoise("sigma2_phi must be > 0 for MLE weighting"));
    }
    Ok((1.0 / noise.sigma2_theta, 1.0 / noise.sigma2_phi))
}

fn check_lengths(measurements: &AngleMeasurementSet, uavs: &[Point3]) -> Result<()> {
    if measurements.len() != uavs.len() {
        return Err(Error::LengthMismatch {
            measurements: measurements.len(),
            uavs: uavs.len(),
        });
    }
    Ok(())
}

/// Weighted squared angle residuals
/// `sum wrap(theta_m(u) - theta_m)^2 / s2_theta + (phi_m(u) - phi_m)^2 / s2_phi`.
pub fn mle_cost(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
    noise: &NoiseSpec,
    u: &Point3,
) -> Result<f64> {
    check_lengths(measurements, uavs)?;
    let (wt, wp) = weights(noise)?;
    cost_unchecked(measurements, uavs, wt, wp, u)
}

fn cost_unchecked(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
    wt: f64,
    wp: f64,
    u: &Point3,
) -> Result<f64> {
    let mut j = 0.0;
    for (i, (meas, uav)) in measurements.pairs().iter().zip(uavs).enumerate() {
        let a = crate::geometry::angles_for_sensor(u, uav, i)?;
        let rt = wrap_angle(a.azimuth() - meas.azimuth());
        let rp = a.elevation() - meas.elevation();
        j += wt * rt * rt + wp * rp * rp;
    }
    Ok(j)
}

/// Gauss-Newton normal matrix and gradient of the cost at `u`.
fn linearize(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
    wt: f64,
    wp: f64,
    u: &Point3,
) -> Result<(Matrix3<f64>, Vector3<f64>, f64)> {
    let mut h = Matrix3::zeros();
    let mut g = Vector3::zeros();
    let mut cost = 0.0;
    for (i, (meas, uav)) in measurements.pairs().iter().zip(uavs).enumerate() {
        let (a, jac) = jacobian_for_sensor(u, uav, i)?;
        let rt = wrap_angle(a.azimuth() - meas.azimuth());
        let rp = a.elevation() - meas.elevation();
        let gt = jac.azimuth_row();
        let gp = jac.elevation_row();
        h += gt * gt.transpose() * wt + gp * gp.transpose() * wp;
        g += gt * (2.0 * wt * rt) + gp * (2.0 * wp * rp);
        cost += wt * rt * rt + wp * rp * rp;
    }
    Ok((h, g, cost))
}

/// Gradient of [`mle_cost`] with respect to the source position.
pub fn mle_gradient(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
    noise: &NoiseSpec,
    u: &Point3,
) -> Result<Vector3<f64>> {
    check_lengths(measurements, uavs)?;
    let (wt, wp) = weights(noise)?;
    linearize(measurements, uavs, wt, wp, u).map(|(_, g, _)| g)
}

/// Maximum-likelihood position by damped Gauss-Newton from `init`.
///
/// A step is halved (at most 20 times) until the cost does not increase.
/// When no acceptable step is found, or the Gauss-Newton matrix is too
/// ill-conditioned to invert, the best point so far is returned with
/// `converged = false`.
pub fn mle_estimate(
    measurements: &AngleMeasurementSet,
    uavs: &[Point3],
    noise: &NoiseSpec,
    init: Point3,
    opts: &MleOptions,
) -> Result<EstimateReport> {
    check_lengths(measurements, uavs)?;
    let (wt, wp) = weights(noise)?;
    if !init.is_finite() {
        return Err(Error::NonFinite("MLE initial point"));
    }

    let mut u = init;
    let mut trace = vec![u];
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let (h, g, cost) = linearize(measurements, uavs, wt, wp, &u)?;
        // an ill-conditioned normal matrix ends the search like a failed line search
        let Ok(inv) = checked_spd_inverse(&h) else {
            break;
        };
        let delta = -(inv * g) * 0.5;
        if delta.norm() < opts.tolerance {
            converged = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = Point3::from_vector(&(u.to_vector() + delta * scale));
            if let Ok(c) = cost_unchecked(measurements, uavs, wt, wp, &cand) {
                if c <= cost {
                    accepted = Some(cand);
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };
        if !next.is_finite() {
            return Err(Error::NonFinite("MLE iterate"));
        }
        let step = next.distance(&u);
        u = next;
        trace.push(u);
        if step < opts.tolerance {
            converged = true;
            break;
        }
    }

    Ok(EstimateReport {
        position: u,
        radius: None,
        sigma2_hat: None,
        iterations_used: trace.len() - 1,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{true_angles, AnglePair};

    fn uavs() -> Vec<Point3> {
        vec![
            Point3::new(12.0, 5.0, 3.0),
            Point3::new(-8.0, 17.0, -9.0),
            Point3::new(3.0, -14.0, 12.0),
            Point3::new(-19.0, -6.0, 4.0),
            Point3::new(7.0, 21.0, 15.0),
        ]
    }

    fn measure(source: &Point3, noise: &[(f64, f64)]) -> AngleMeasurementSet {
        AngleMeasurementSet::new(
            uavs()
                .iter()
                .zip(noise.iter().cycle())
                .map(|(u, (dt, dp))| {
                    let a = true_angles(source, u).unwrap();
                    AnglePair::new(a.azimuth() + dt, a.elevation() + dp).unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_recovers_source() {
        let s = Point3::new(0.5, 1.0, -1.0);
        let m = measure(&s, &[(0.0, 0.0)]);
        let noise = NoiseSpec::equal(1e-4).unwrap();
        let rep = mle_estimate(&m, &uavs(), &noise, Point3::new(2.0, -1.0, 0.0), &MleOptions::default())
            .unwrap();
        assert!(rep.converged);
        assert!(rep.position.distance(&s) <= 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = Point3::new(0.5, 1.0, -1.0);
        let m = measure(&s, &[(0.02, -0.01), (-0.03, 0.02)]);
        let noise = NoiseSpec::new(1e-3, 2e-3).unwrap();
        let u = Point3::new(1.0, 0.0, 0.3);
        let g = mle_gradient(&m, &uavs(), &noise, &u).unwrap();
        let h = 1e-6;
        for axis in 0..3 {
            let mut e = Vector3::zeros();
            e[axis] = h;
            let plus = Point3::from_vector(&(u.to_vector() + e));
            let minus = Point3::from_vector(&(u.to_vector() - e));
            let fd = (mle_cost(&m, &uavs(), &noise, &plus).unwrap()
                - mle_cost(&m, &uavs(), &noise, &minus).unwrap())
                / (2.0 * h);
            assert!((fd - g[axis]).abs() <= 1e-5 * g.norm(), "axis {axis}: {fd} vs {}", g[axis]);
        }
    }

    #[test]
    fn converged_point_is_stationary() {
        let s = Point3::new(0.5, 1.0, -1.0);
        let m = measure(&s, &[(0.02, -0.01), (-0.03, 0.02), (0.01, 0.04)]);
        let noise = NoiseSpec::equal(1e-3).unwrap();
        let init = Point3::new(1.5, 0.0, 0.0);
        let rep = mle_estimate(&m, &uavs(), &noise, init, &MleOptions::default()).unwrap();
        assert!(rep.converged);
        let g0 = mle_gradient(&m, &uavs(), &noise, &init).unwrap().norm();
        let g = mle_gradient(&m, &uavs(), &noise, &rep.position).unwrap().norm();
        assert!(g <= 1e-6 * g0, "{g} vs {g0}");
    }

    #[test]
    fn zero_noise_weighting_rejected() {
        let m = measure(&Point3::ORIGIN, &[(0.0, 0.0)]);
        let noise = NoiseSpec::new(0.0, 1e-3).unwrap();
        assert!(matches!(
            mle_estimate(&m, &uavs(), &noise, Point3::ORIGIN, &MleOptions::default()),
            Err(Error::ZeroNoise(_))
        ));
    }

    #[test]
    fn residual_wrapping_near_pi() {
        // measured azimuth just below +pi, true azimuth just above -pi
        let uav = vec![Point3::new(-10.0, -0.01, 0.0), Point3::new(0.0, 10.0, 1.0)];
        let m = AngleMeasurementSet::new(vec![
            AnglePair::new(std::f64::consts::PI - 0.001, 0.0).unwrap(),
            true_angles(&Point3::ORIGIN, &uav[1]).unwrap(),
        ])
        .unwrap();
        let noise = NoiseSpec::equal(1.0).unwrap();
        let j = mle_cost(&m, &uav, &noise, &Point3::ORIGIN).unwrap();
        assert!(j < 1e-5, "{j}");
    }
}
