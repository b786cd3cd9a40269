//! Scenario generation, noise injection and seeded Monte Carlo sweeps.
//!
//! Every random draw in a sweep comes from a ChaCha stream whose seed is
//! derived from the master seed and the cell/trial indices, so results do not
//! depend on how trials are scheduled across threads.

mod sweep;

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::NoiseSpec;
use crate::geometry::{true_angles, wrap_angle, AngleMeasurementSet, AnglePair, Point3};

pub use sweep::{
    convergence_study, run_sweep, ConvergenceResult, ConvergenceRow, InitKind, SweepConfig,
    SweepResult, SweepRow,
};

/// Elevation samples are clamped this far inside +-pi/2.
const ELEVATION_MARGIN: f64 = 1e-9;
/// Minimum distance of a generated UAV from the source and from the
/// vertical axis through it, meters.
const REJECTION_RADIUS: f64 = 1e-6;

/// Source plus UAV positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub source: Point3,
    pub uavs: Vec<Point3>,
}

impl Scenario {
    pub fn new(source: Point3, uavs: Vec<Point3>) -> Result<Self> {
        if uavs.len() < 2 {
            return Err(Error::InsufficientSensors(uavs.len()));
        }
        if !source.is_finite() || uavs.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite("scenario coordinates"));
        }
        for (i, u) in uavs.iter().enumerate() {
            crate::geometry::angles_for_sensor(&source, u, i)?;
        }
        Ok(Scenario { source, uavs })
    }

    pub fn sensor_count(&self) -> usize {
        self.uavs.len()
    }

    /// Noise-free angles from the source to every UAV.
    pub fn true_angles(&self) -> Vec<AnglePair> {
        self.uavs
            .iter()
            .map(|u| true_angles(&self.source, u).expect("validated at construction"))
            .collect()
    }
}

/// Draws `m` UAVs uniformly in the cube `source +- half_width`, redrawing any
/// that land on the source or on its vertical axis.
pub fn generate_scenario<R: Rng + ?Sized>(
    source: Point3,
    half_width: f64,
    m: usize,
    rng: &mut R,
) -> Result<Scenario> {
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::config("half_width", "must be finite and > 0"));
    }
    if m < 2 {
        return Err(Error::InsufficientSensors(m));
    }
    let mut uavs = Vec::with_capacity(m);
    while uavs.len() < m {
        let d = Point3::new(
            rng.random_range(-half_width..=half_width),
            rng.random_range(-half_width..=half_width),
            rng.random_range(-half_width..=half_width),
        );
        if d.x.hypot(d.y) < REJECTION_RADIUS {
            continue;
        }
        uavs.push(source + d);
    }
    Scenario::new(source, uavs)
}

/// Noisy angle measurements: Gaussian azimuth noise wrapped into (-pi, pi],
/// Gaussian elevation noise clamped just inside +-pi/2.
pub fn sample_measurements<R: Rng + ?Sized>(
    scenario: &Scenario,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<AngleMeasurementSet> {
    let nt = Normal::new(0.0, noise.sigma2_theta.sqrt())
        .map_err(|e| Error::config("sigma2_theta", e.to_string()))?;
    let np = Normal::new(0.0, noise.sigma2_phi.sqrt())
        .map_err(|e| Error::config("sigma2_phi", e.to_string()))?;
    let limit = FRAC_PI_2 - ELEVATION_MARGIN;
    let pairs = scenario
        .true_angles()
        .into_iter()
        .map(|a| {
            let theta = wrap_angle(a.azimuth() + nt.sample(rng));
            let phi = (a.elevation() + np.sample(rng)).clamp(-limit, limit);
            AnglePair::new(theta, phi)
        })
        .collect::<Result<Vec<_>>>()?;
    AngleMeasurementSet::new(pairs)
}

/// Mean squared position error `(1/N) sum |u_n - truth|^2`.
pub fn mse(estimates: &[Point3], truth: &Point3) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("mse needs at least one estimate"));
    }
    let sum: f64 = estimates.iter().map(|e| (*e - *truth).norm_squared()).sum();
    Ok(sum / estimates.len() as f64)
}

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial of one (M, sigma^2) cell.
pub fn trial_seed(master: u64, m_index: usize, sigma_index: usize, trial: usize) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ m_index as u64);
    h = splitmix64(h ^ (sigma_index as u64).rotate_left(21));
    splitmix64(h ^ (trial as u64).rotate_left(42))
}

/// Seed for the shared scenario of an M value when scenarios are fixed.
pub fn scenario_seed(master: u64, m_index: usize) -> u64 {
    splitmix64(splitmix64(master ^ 0x5ce7_a710) ^ m_index as u64)
}

/// Independent random streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scenario = 0,
    Measurements = 1,
    Initializer = 2,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_in_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = generate_scenario(Point3::ORIGIN, 25.0, 20, &mut rng).unwrap();
        assert_eq!(s.sensor_count(), 20);
        for u in &s.uavs {
            for c in [u.x, u.y, u.z] {
                assert!((-25.0..=25.0).contains(&c));
            }
        }
    }

    #[test]
    fn scenario_is_deterministic() {
        let a = generate_scenario(Point3::ORIGIN, 25.0, 7, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = generate_scenario(Point3::ORIGIN, 25.0, 7, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(Point3::ORIGIN, 25.0, 7, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scenario_size_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_scenario(Point3::ORIGIN, 25.0, 2, &mut rng).is_ok());
        assert_eq!(
            generate_scenario(Point3::ORIGIN, 25.0, 1, &mut rng),
            Err(Error::InsufficientSensors(1))
        );
        assert!(generate_scenario(Point3::ORIGIN, 0.0, 3, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_measurements_are_true_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = generate_scenario(Point3::new(1.0, 2.0, 3.0), 10.0, 6, &mut rng).unwrap();
        let m = sample_measurements(&s, &NoiseSpec::equal(0.0).unwrap(), &mut rng).unwrap();
        assert_eq!(m.pairs(), s.true_angles().as_slice());
    }

    #[test]
    fn azimuth_noise_variance() {
        // law of large numbers: 1e5 draws of variance 1e-4
        let s = Scenario::new(
            Point3::ORIGIN,
            vec![Point3::new(10.0, 1.0, 2.0), Point3::new(-3.0, 8.0, -1.0)],
        )
        .unwrap();
        let truth = s.true_angles();
        let noise = NoiseSpec::new(1e-4, 1e-4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut resid = Vec::with_capacity(100_000);
        while resid.len() < 100_000 {
            let m = sample_measurements(&s, &noise, &mut rng).unwrap();
            for (p, t) in m.pairs().iter().zip(&truth) {
                resid.push(wrap_angle(p.azimuth() - t.azimuth()));
            }
        }
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((0.9e-4..=1.1e-4).contains(&var), "{var}");
    }

    #[test]
    fn measurements_are_deterministic_and_valid() {
        let s = generate_scenario(Point3::ORIGIN, 25.0, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let noise = NoiseSpec::equal(4.0).unwrap();
        let a = sample_measurements(&s, &noise, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = sample_measurements(&s, &noise, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
        for p in a.pairs() {
            assert!(p.elevation().abs() < FRAC_PI_2);
            assert!(p.azimuth() > -std::f64::consts::PI && p.azimuth() <= std::f64::consts::PI);
        }
    }

    #[test]
    fn mse_examples() {
        let t = Point3::new(1.0, 1.0, 1.0);
        assert_eq!(mse(&[t, t], &t).unwrap(), 0.0);
        let e = [t + Point3::new(1.0, 0.0, 0.0), t + Point3::new(0.0, 0.0, -3.0)];
        assert_eq!(mse(&e, &t).unwrap(), 5.0);
        assert_eq!(mse(&[], &t), Err(Error::EmptyInput("mse needs at least one estimate")));
    }

    #[test]
    fn mse_of_gaussian_estimates_matches_trace() {
        // 8000 draws with covariance diag(0.5, 1, 2): MSE within 5% of 3.5
        let mut rng = ChaCha8Rng::seed_from_u64(8000);
        let sd = [0.5f64.sqrt(), 1.0, 2f64.sqrt()];
        let n = Normal::new(0.0, 1.0).unwrap();
        let est: Vec<Point3> = (0..8000)
            .map(|_| Point3::new(sd[0] * n.sample(&mut rng), sd[1] * n.sample(&mut rng), sd[2] * n.sample(&mut rng)))
            .collect();
        let v = mse(&est, &Point3::ORIGIN).unwrap();
        assert!((v / 3.5 - 1.0).abs() < 0.05, "{v}");
    }

    #[test]
    fn seeds_differ_by_index() {
        let a = trial_seed(0, 0, 0, 0);
        assert_ne!(a, trial_seed(0, 0, 0, 1));
        assert_ne!(a, trial_seed(0, 0, 1, 0));
        assert_ne!(a, trial_seed(0, 1, 0, 0));
        assert_ne!(a, trial_seed(1, 0, 0, 0));
        assert_ne!(trial_seed(0, 0, 1, 0), trial_seed(0, 0, 0, 1));
    }

    #[test]
    fn db_round_trip() {
        assert_eq!(to_db(1e-3), -30.0);
        assert!((from_db(-20.0) - 1e-2).abs() < 1e-18);
    }
}
