//! Position estimators.
//!
//! The two geometric-center estimators work on the plane set built from the
//! measured angles:
//!
//! * [`cis_estimate`] finds the center of the sphere that is jointly closest to
//!   being tangent to all 2M planes, alternating a closed-form radius update
//!   with a linear position update. The converged radius also yields an
//!   estimate of the angle-noise variance.
//! * [`msd_ls_estimate`] drops the radius and minimizes the plain sum of
//!   squared point-plane distances, a 3-unknown linear least-squares problem.
//!   [`msd_tls_estimate`] is its total-least-squares counterpart.
//!
//! [`conventional_ls_estimate`] (tangent-form pseudolinear LS) and
//! [`mle_estimate`] (damped Gauss-Newton on the angle likelihood) are the
//! comparison baselines. Every estimator returns an [`EstimateReport`].

mod baseline;
mod cis;
mod mle;
mod msd;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleMeasurementSet, PlaneSet, Point3};

pub use baseline::conventional_ls_estimate;
pub use cis::{
    cis_cost, cis_estimate, cis_position_update, cis_profile_cost, cis_radius_update,
    estimate_noise_variance, unit_residual_sum, NormalSystem,
};
pub use mle::{mle_cost, mle_estimate, mle_gradient, MleOptions};
pub use msd::{msd_cost, msd_ls_estimate, msd_tls_estimate};

/// Output shared by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub position: Point3,
    /// Inscribed-sphere radius, meters (CIS only).
    pub radius: Option<f64>,
    /// Estimated angle-noise variance, rad^2 (CIS only).
    pub sigma2_hat: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Iterates including the initial point; `iterations_used + 1` entries.
    pub trace: Vec<Point3>,
}

impl EstimateReport {
    pub(crate) fn closed_form(position: Point3) -> Self {
        EstimateReport {
            position,
            radius: None,
            sigma2_hat: None,
            iterations_used: 0,
            converged: true,
            trace: vec![position],
        }
    }
}

/// Azimuth and elevation noise variances, rad^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma2_theta: f64,
    pub sigma2_phi: f64,
}

impl NoiseSpec {
    pub fn new(sigma2_theta: f64, sigma2_phi: f64) -> Result<Self> {
        for (name, v) in [("sigma2_theta", sigma2_theta), ("sigma2_phi", sigma2_phi)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(name, format!("variance must be finite and >= 0, got {v}")));
            }
        }
        Ok(NoiseSpec {
            sigma2_theta,
            sigma2_phi,
        })
    }

    pub fn equal(sigma2: f64) -> Result<Self> {
        Self::new(sigma2, sigma2)
    }

    pub fn is_zero(&self) -> bool {
        self.sigma2_theta == 0.0 && self.sigma2_phi == 0.0
    }
}

/// Starting point of the CIS iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Initializer {
    /// Uniform draw from the axis-aligned cube `center +- half_width`.
    RandomInCube { center: Point3, half_width: f64 },
    /// The MSD-LS solution.
    WarmStartLs,
    /// A caller-supplied point.
    At(Point3),
}

/// How the converged radius is turned into a noise-variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VarianceFormula {
    /// `4 M^2 r^2 / sum d_m^2 (cos^2 phi_m + 1)`.
    #[default]
    SquaredSum,
    /// Inverts the mean-radius relation with `E|n| = sigma sqrt(2/pi)`:
    /// `sigma = 2 M r sqrt(pi/2) / sum d_m (|cos phi_m| + 1)`.
    MeanAbsolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CisOptions {
    pub max_iterations: usize,
    /// Stop once an update moves the position by less than this, meters.
    pub position_tolerance: f64,
    pub initializer: Initializer,
    pub variance_formula: VarianceFormula,
}

impl Default for CisOptions {
    fn default() -> Self {
        CisOptions {
            max_iterations: 50,
            position_tolerance: 1e-6,
            initializer: Initializer::WarmStartLs,
            variance_formula: VarianceFormula::SquaredSum,
        }
    }
}

impl CisOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::config("cis_max_iterations", "must be >= 1"));
        }
        if !(self.position_tolerance > 0.0) {
            return Err(Error::config("cis_tolerance", "must be > 0"));
        }
        if let Initializer::RandomInCube { half_width, .. } = self.initializer {
            if !(half_width > 0.0) {
                return Err(Error::config("half_width", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Estimator identifiers used by the harness and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    Cis,
    MsdLs,
    MsdTls,
    ConventionalLs,
    Mle,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Cis,
        EstimatorKind::MsdLs,
        EstimatorKind::MsdTls,
        EstimatorKind::ConventionalLs,
        EstimatorKind::Mle,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            EstimatorKind::Cis => "cis",
            EstimatorKind::MsdLs => "msd-ls",
            EstimatorKind::MsdTls => "msd-tls",
            EstimatorKind::ConventionalLs => "ls",
            EstimatorKind::Mle => "mle",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cis" => Ok(EstimatorKind::Cis),
            "msd-ls" | "msd_ls" | "msdls" => Ok(EstimatorKind::MsdLs),
            "msd-tls" | "msd_tls" | "msdtls" => Ok(EstimatorKind::MsdTls),
            "ls" | "conventional-ls" | "conventional_ls" => Ok(EstimatorKind::ConventionalLs),
            "mle" => Ok(EstimatorKind::Mle),
            other => Err(Error::config(
                "estimator",
                format!("unknown estimator '{other}' (expected cis, msd-ls, msd-tls, ls, mle)"),
            )),
        }
    }
}

/// Everything an estimator may need for one localization problem.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub measurements: &'a AngleMeasurementSet,
    pub uavs: &'a [Point3],
    pub planes: &'a PlaneSet,
    /// Noise model used to weight the MLE.
    pub noise: NoiseSpec,
}

/// Per-estimator settings for [`run_estimator`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorSettings {
    pub cis: CisOptions,
    pub mle: MleOptions,
}

/// Runs one estimator. The MLE starts from the MSD-LS solution.
pub fn run_estimator<R: Rng + ?Sized>(
    kind: EstimatorKind,
    problem: &Problem<'_>,
    settings: &EstimatorSettings,
    rng: &mut R,
) -> Result<EstimateReport> {
    match kind {
        EstimatorKind::Cis => cis_estimate(problem.planes, &settings.cis, rng),
        EstimatorKind::MsdLs => msd_ls_estimate(problem.planes),
        EstimatorKind::MsdTls => msd_tls_estimate(problem.planes),
        EstimatorKind::ConventionalLs => {
            conventional_ls_estimate(problem.measurements, problem.uavs)
        }
        EstimatorKind::Mle => {
            let init = msd_ls_estimate(problem.planes)?.position;
            mle_estimate(
                problem.measurements,
                problem.uavs,
                &problem.noise,
                init,
                &settings.mle,
            )
        }
    }
}
