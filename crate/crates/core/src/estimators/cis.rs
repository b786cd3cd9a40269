use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use super::{msd_ls_estimate, CisOptions, EstimateReport, Initializer, VarianceFormula};
use crate::error::{Error, Result};
use crate::geometry::{PlaneSet, Point3};
use crate::linalg::checked_spd_inverse;

/// Plane distances below this are treated as exact incidence; the plane's
/// unit residual then contributes the zero subgradient.
const INCIDENCE_EPS: f64 = 1e-15;

/// The normal matrix `sum a a^T` and right-hand side `sum a b` of the plane
/// system, with the inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    pub gram: Matrix3<f64>,
    pub rhs: Vector3<f64>,
    inverse: Matrix3<f64>,
}

impl NormalSystem {
    pub fn assemble(planes: &PlaneSet) -> Result<Self> {
        let mut gram = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        for p in planes.iter() {
            gram += p.normal * p.normal.transpose();
            rhs += p.normal * p.offset;
        }
        let inverse =
            checked_spd_inverse(&gram).map_err(|condition| Error::RankDeficient { condition })?;
        Ok(NormalSystem { gram, rhs, inverse })
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.inverse
    }

    /// Solves `gram * u = rhs + extra`.
    pub fn solve_shifted(&self, extra: &Vector3<f64>) -> Vector3<f64> {
        self.inverse * (self.rhs + extra)
    }
}

/// Mean distance from `u` to the 2M planes.
pub fn cis_radius_update(planes: &PlaneSet, u: &Point3) -> f64 {
    let v = u.to_vector();
    let sum: f64 = planes.iter().map(|p| p.residual(&v).abs()).sum();
    sum / (2 * planes.sensor_count()) as f64
}

/// Sum over planes of `a * sign(a.u - b)`; planes through `u` contribute zero.
pub fn unit_residual_sum(planes: &PlaneSet, u: &Point3) -> Vector3<f64> {
    let v = u.to_vector();
    planes.iter().fold(Vector3::zeros(), |acc, p| {
        let res = p.residual(&v);
        if res.abs() < INCIDENCE_EPS {
            acc
        } else {
            acc + p.normal * res.signum()
        }
    })
}

/// One position update `u' = gram^-1 (rhs + r * unit_residual_sum(u_prev))`.
pub fn cis_position_update(
    planes: &PlaneSet,
    u_prev: &Point3,
    radius: f64,
    system: &NormalSystem,
) -> Point3 {
    let shift = unit_residual_sum(planes, u_prev) * radius;
    Point3::from_vector(&system.solve_shifted(&shift))
}

/// Inscribed-sphere cost `sum (d_i(u) - r)^2` over all 2M planes.
pub fn cis_cost(planes: &PlaneSet, u: &Point3, radius: f64) -> f64 {
    let v = u.to_vector();
    planes
        .iter()
        .map(|p| {
            let e = p.residual(&v).abs() - radius;
            e * e
        })
        .sum()
}

/// Inscribed-sphere cost with the radius minimized out (`r` = mean distance).
pub fn cis_profile_cost(planes: &PlaneSet, u: &Point3) -> f64 {
    cis_cost(planes, u, cis_radius_update(planes, u))
}

/// Noise variance implied by radius `r` around `position`, assuming equal
/// azimuth and elevation variances. Range and elevation of each UAV are
/// evaluated from `position`.
pub fn estimate_noise_variance(
    radius: f64,
    position: &Point3,
    planes: &PlaneSet,
    formula: VarianceFormula,
) -> Result<f64> {
    let m = planes.sensor_count() as f64;
    let mut denom = 0.0;
    for (i, uav) in planes.uavs().iter().enumerate() {
        let diff = *uav - *position;
        let d2 = diff.norm_squared();
        if d2 == 0.0 {
            return Err(Error::IdenticalPoints { sensor: i });
        }
        let rho2 = diff.x * diff.x + diff.y * diff.y;
        denom += match formula {
            // d^2 (cos^2 phi + 1) = rho^2 + d^2
            VarianceFormula::SquaredSum => rho2 + d2,
            // d (|cos phi| + 1) = rho + d
            VarianceFormula::MeanAbsolute => rho2.sqrt() + d2.sqrt(),
        };
    }
    Ok(match formula {
        VarianceFormula::SquaredSum => 4.0 * m * m * radius * radius / denom,
        VarianceFormula::MeanAbsolute => {
            let sigma = 2.0 * m * radius * (std::f64::consts::PI / 2.0).sqrt() / denom;
            sigma * sigma
        }
    })
}

fn initial_point<R: Rng + ?Sized>(
    planes: &PlaneSet,
    init: &Initializer,
    rng: &mut R,
) -> Result<Point3> {
    match *init {
        Initializer::RandomInCube { center, half_width } => {
            let mut draw = |c: f64| c + rng.random_range(-half_width..=half_width);
            Ok(Point3::new(draw(center.x), draw(center.y), draw(center.z)))
        }
        Initializer::WarmStartLs => Ok(msd_ls_estimate(planes)?.position),
        Initializer::At(p) => Ok(p),
    }
}

/// Center-of-inscribed-sphere estimate by fixed-point iteration.
///
/// Each step recomputes the radius as the mean plane distance at the current
/// point and then solves the 3x3 system for the next position. Iteration stops
/// once the position moves less than `opts.position_tolerance` or after
/// `opts.max_iterations` updates. `rng` is only consumed by the random-cube
/// initializer.
pub fn cis_estimate<R: Rng + ?Sized>(
    planes: &PlaneSet,
    opts: &CisOptions,
    rng: &mut R,
) -> Result<EstimateReport> {
    opts.validate()?;
    let system = NormalSystem::assemble(planes)?;
    let mut u = initial_point(planes, &opts.initializer, rng)?;
    if !u.is_finite() {
        return Err(Error::NonFinite("CIS initial point"));
    }

    let mut trace = Vec::with_capacity(opts.max_iterations + 1);
    trace.push(u);
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let r = cis_radius_update(planes, &u);
        let next = cis_position_update(planes, &u, r, &system);
        if !next.is_finite() {
            return Err(Error::NonFinite("CIS iterate"));
        }
        let step = next.distance(&u);
        u = next;
        trace.push(u);
        if step < opts.position_tolerance {
            converged = true;
            break;
        }
    }

    let radius = cis_radius_update(planes, &u);
    let sigma2_hat = estimate_noise_variance(radius, &u, planes, opts.variance_formula)?;
    Ok(EstimateReport {
        position: u,
        radius: Some(radius),
        sigma2_hat: Some(sigma2_hat),
        iterations_used: trace.len() - 1,
        converged,
        trace,
    })
}
