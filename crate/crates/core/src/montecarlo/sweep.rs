use serde::{Deserialize, Serialize};

use super::{
    generate_scenario, sample_measurements, scenario_seed, stream_rng, to_db, trial_seed, Scenario,
    Stream,
};
use crate::bounds::crlb;
use crate::error::{Error, Result};
use crate::estimators::{
    cis_estimate, run_estimator, CisOptions, EstimatorKind, EstimatorSettings, Initializer,
    MleOptions, NoiseSpec, Problem,
};
use crate::geometry::{PlaneSet, Point3};
use crate::par::{map_indexed, Execution};

/// CIS starting point selection for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitKind {
    /// MSD-LS solution.
    #[default]
    WarmLs,
    /// Uniform in the scenario cube.
    Random,
}

impl InitKind {
    pub fn id(&self) -> &'static str {
        match self {
            InitKind::WarmLs => "warm-ls",
            InitKind::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "warm-ls" | "warm" | "ls" => Ok(InitKind::WarmLs),
            "random" | "random-cube" => Ok(InitKind::Random),
            other => Err(Error::config(
                "cis_init",
                format!("unknown initializer '{other}' (expected warm-ls or random)"),
            )),
        }
    }

    fn initializer(&self, source: Point3, half_width: f64) -> Initializer {
        match self {
            InitKind::WarmLs => Initializer::WarmStartLs,
            InitKind::Random => Initializer::RandomInCube {
                center: source,
                half_width,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub source: Point3,
    pub half_width: f64,
    pub m_values: Vec<usize>,
    /// Noise variances, rad^2. With `equal_variance` these apply to both
    /// angles; otherwise to the azimuth only.
    pub sigma2: Vec<f64>,
    /// Elevation variance when `equal_variance` is false, rad^2.
    pub sigma2_phi: Option<f64>,
    pub equal_variance: bool,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    /// Draw one scenario per M value instead of one per trial.
    pub fixed_scenario: bool,
    pub cis: CisOptions,
    pub cis_init: InitKind,
    pub mle: MleOptions,
    /// Largest iteration count of the convergence study.
    pub k_max: usize,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            source: Point3::ORIGIN,
            half_width: 25.0,
            m_values: vec![20],
            sigma2: vec![1e-3],
            sigma2_phi: None,
            equal_variance: true,
            trials: 8000,
            seed: 0,
            estimators: EstimatorKind::ALL.to_vec(),
            fixed_scenario: false,
            cis: CisOptions::default(),
            cis_init: InitKind::WarmLs,
            mle: MleOptions::default(),
            k_max: 10,
            execution: Execution::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.source.is_finite() {
            return Err(Error::config("source", "coordinates must be finite"));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::config("half_width", "must be finite and > 0"));
        }
        if self.m_values.is_empty() {
            return Err(Error::config("m_values", "list is empty"));
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m < 2) {
            return Err(Error::config("m_values", format!("M = {m}: every M must be >= 2")));
        }
        if self.sigma2.is_empty() {
            return Err(Error::config("sigma2_db", "list is empty"));
        }
        if let Some(s) = self.sigma2.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::config("sigma2_db", format!("variance {s} must be finite and >= 0")));
        }
        if !self.equal_variance {
            match self.sigma2_phi {
                Some(v) if v >= 0.0 && v.is_finite() => {}
                Some(v) => {
                    return Err(Error::config("sigma2_phi_db", format!("variance {v} must be finite and >= 0")))
                }
                None => {
                    return Err(Error::config(
                        "sigma2_phi_db",
                        "required when equal_variance = false",
                    ))
                }
            }
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("estimators", "list is empty"));
        }
        if self.k_max == 0 {
            return Err(Error::config("k_max", "must be >= 1"));
        }
        if self.mle.max_iterations == 0 || !(self.mle.tolerance > 0.0) {
            return Err(Error::config("mle", "max iterations must be >= 1 and tolerance > 0"));
        }
        let cis = CisOptions {
            initializer: Initializer::WarmStartLs,
            ..self.cis
        };
        cis.validate()
    }

    fn noise(&self, sigma2: f64) -> NoiseSpec {
        if self.equal_variance {
            NoiseSpec {
                sigma2_theta: sigma2,
                sigma2_phi: sigma2,
            }
        } else {
            NoiseSpec {
                sigma2_theta: sigma2,
                sigma2_phi: self.sigma2_phi.unwrap_or(sigma2),
            }
        }
    }

    fn settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            cis: CisOptions {
                initializer: self.cis_init.initializer(self.source, self.half_width),
                ..self.cis
            },
            mle: self.mle,
        }
    }

    fn fixed_scenarios(&self) -> Result<Option<Vec<Scenario>>> {
        if !self.fixed_scenario {
            return Ok(None);
        }
        self.m_values
            .iter()
            .enumerate()
            .map(|(mi, &m)| {
                let mut rng = stream_rng(scenario_seed(self.seed, mi), Stream::Scenario);
                generate_scenario(self.source, self.half_width, m, &mut rng)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn scenario_for(
        &self,
        fixed: &Option<Vec<Scenario>>,
        mi: usize,
        seed: u64,
    ) -> Result<Scenario> {
        match fixed {
            Some(list) => Ok(list[mi].clone()),
            None => {
                let mut rng = stream_rng(seed, Stream::Scenario);
                generate_scenario(self.source, self.half_width, self.m_values[mi], &mut rng)
            }
        }
    }
}

/// Weights for the MLE. The minimizer only depends on the variance ratio, so
/// zero variances are replaced by a positive stand-in.
fn mle_weighting(noise: &NoiseSpec) -> NoiseSpec {
    match (noise.sigma2_theta > 0.0, noise.sigma2_phi > 0.0) {
        (true, true) => *noise,
        (false, false) => NoiseSpec {
            sigma2_theta: 1.0,
            sigma2_phi: 1.0,
        },
        (false, true) => NoiseSpec {
            sigma2_theta: noise.sigma2_phi * 1e-12,
            sigma2_phi: noise.sigma2_phi,
        },
        (true, false) => NoiseSpec {
            sigma2_theta: noise.sigma2_theta,
            sigma2_phi: noise.sigma2_theta * 1e-12,
        },
    }
}

fn crlb_trace(scenario: &Scenario, noise: &NoiseSpec) -> Option<f64> {
    if noise.is_zero() {
        return Some(0.0);
    }
    crlb(&scenario.source, &scenario.uavs, noise)
        .ok()
        .map(|c| c.trace)
}

/// One output row: an estimator at one (M, sigma^2) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub estimator: EstimatorKind,
    pub m: usize,
    pub sigma2: f64,
    pub sigma2_db: f64,
    pub mse_m2: f64,
    pub mse_db: f64,
    pub crlb_trace_m2: f64,
    pub crlb_trace_db: f64,
    pub mean_iters: f64,
    pub failures: usize,
    pub trials: usize,
    /// Median squared error over successful trials, m^2.
    #[serde(skip)]
    pub median_se_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, estimator: EstimatorKind, m: usize, sigma2: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.m == m && r.sigma2 == sigma2)
    }
}

struct TrialOutcome {
    /// Per configured estimator: squared error and iterations, or failure.
    errors: Vec<Option<(f64, usize)>>,
    crlb_trace: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mean_of_some(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Runs every configured estimator over the (M, sigma^2) grid.
///
/// Within a trial all estimators see the same measurements. Trials that make
/// an estimator fail are counted in `failures` and left out of its MSE.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let fixed = config.fixed_scenarios()?;
    let settings = config.settings();
    let mut rows = Vec::with_capacity(config.m_values.len() * config.sigma2.len() * config.estimators.len());

    for (mi, &m) in config.m_values.iter().enumerate() {
        for (si, &sigma2) in config.sigma2.iter().enumerate() {
            let noise = config.noise(sigma2);
            let weighting = mle_weighting(&noise);
            let outcomes = map_indexed(config.trials, config.execution, |t| -> Result<TrialOutcome> {
                let seed = trial_seed(config.seed, mi, si, t);
                let scenario = config.scenario_for(&fixed, mi, seed)?;
                let meas = sample_measurements(&scenario, &noise, &mut stream_rng(seed, Stream::Measurements))?;
                let planes = PlaneSet::build(&meas, &scenario.uavs)?;
                let problem = Problem {
                    measurements: &meas,
                    uavs: &scenario.uavs,
                    planes: &planes,
                    noise: weighting,
                };
                let errors = config
                    .estimators
                    .iter()
                    .map(|&kind| {
                        let mut rng = stream_rng(seed, Stream::Initializer);
                        run_estimator(kind, &problem, &settings, &mut rng).ok().map(|rep| {
                            (
                                (rep.position - scenario.source).norm_squared(),
                                rep.iterations_used,
                            )
                        })
                    })
                    .collect();
                Ok(TrialOutcome {
                    errors,
                    crlb_trace: crlb_trace(&scenario, &noise),
                })
            });
            let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

            let crlb_mean = mean_of_some(outcomes.iter().map(|o| o.crlb_trace));
            for (ei, &estimator) in config.estimators.iter().enumerate() {
                let mut se = Vec::with_capacity(outcomes.len());
                let mut iters = 0usize;
                for o in &outcomes {
                    if let Some((e, k)) = o.errors[ei] {
                        se.push(e);
                        iters += k;
                    }
                }
                let failures = outcomes.len() - se.len();
                let (mse_m2, mean_iters) = if se.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    (
                        se.iter().sum::<f64>() / se.len() as f64,
                        iters as f64 / se.len() as f64,
                    )
                };
                rows.push(SweepRow {
                    estimator,
                    m,
                    sigma2,
                    sigma2_db: to_db(sigma2),
                    mse_m2,
                    mse_db: to_db(mse_m2),
                    crlb_trace_m2: crlb_mean,
                    crlb_trace_db: to_db(crlb_mean),
                    mean_iters,
                    failures,
                    trials: config.trials,
                    median_se_m2: median(&mut se),
                });
            }
        }
    }
    Ok(SweepResult {
        seed: config.seed,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub initializer: InitKind,
    pub m: usize,
    pub sigma2: f64,
    pub sigma2_db: f64,
    /// Number of fixed-point updates applied; 0 is the initial point.
    pub iteration: usize,
    pub mse_m2: f64,
    pub mse_db: f64,
    pub failures: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceResult {
    /// MSE by iteration for one cell.
    pub fn curve(&self, m: usize, sigma2: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.m == m && r.sigma2 == sigma2)
            .map(|r| r.mse_m2)
            .collect()
    }
}

/// MSE of CIS after k = 0..=k_max updates, without early stopping.
///
/// One run with cap `k_max` per trial; the iterate after k updates is exactly
/// what a run capped at k would return.
pub fn convergence_study(
    config: &SweepConfig,
    initializer: InitKind,
    k_max: usize,
) -> Result<ConvergenceResult> {
    config.validate()?;
    if !config.estimators.contains(&EstimatorKind::Cis) {
        return Err(Error::config("estimators", "convergence study requires cis"));
    }
    if k_max == 0 {
        return Err(Error::config("k_max", "must be >= 1"));
    }
    let fixed = config.fixed_scenarios()?;
    let opts = CisOptions {
        max_iterations: k_max,
        position_tolerance: f64::MIN_POSITIVE,
        initializer: initializer.initializer(config.source, config.half_width),
        ..config.cis
    };
    let mut rows = Vec::new();
    for (mi, &m) in config.m_values.iter().enumerate() {
        for (si, &sigma2) in config.sigma2.iter().enumerate() {
            let noise = config.noise(sigma2);
            let outcomes = map_indexed(config.trials, config.execution, |t| -> Result<Option<Vec<f64>>> {
                let seed = trial_seed(config.seed, mi, si, t);
                let scenario = config.scenario_for(&fixed, mi, seed)?;
                let meas = sample_measurements(&scenario, &noise, &mut stream_rng(seed, Stream::Measurements))?;
                let planes = PlaneSet::build(&meas, &scenario.uavs)?;
                let mut rng = stream_rng(seed, Stream::Initializer);
                Ok(cis_estimate(&planes, &opts, &mut rng).ok().map(|rep| {
                    let last = *rep.trace.last().expect("trace holds the initial point");
                    (0..=k_max)
                        .map(|k| {
                            let p = rep.trace.get(k).copied().unwrap_or(last);
                            (p - scenario.source).norm_squared()
                        })
                        .collect()
                }))
            });
            let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
            let ok: Vec<&Vec<f64>> = outcomes.iter().flatten().collect();
            let failures = outcomes.len() - ok.len();
            for k in 0..=k_max {
                let mse_m2 = if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|v| v[k]).sum::<f64>() / ok.len() as f64
                };
                rows.push(ConvergenceRow {
                    initializer,
                    m,
                    sigma2,
                    sigma2_db: to_db(sigma2),
                    iteration: k,
                    mse_m2,
                    mse_db: to_db(mse_m2),
                    failures,
                    trials: config.trials,
                });
            }
        }
    }
    Ok(ConvergenceResult {
        seed: config.seed,
        rows,
    })
}
