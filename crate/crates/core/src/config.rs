//! `key = value` sweep configuration files.
//!
//! ```text
//! # noise sweep at M = 20
//! m_values   = 20
//! sigma2_db  = -30:5:0
//! trials     = 8000
//! estimators = cis, msd-ls, ls, mle
//! ```
//!
//! Lists are comma separated; numeric lists also accept `start:step:stop`
//! (inclusive). `#` starts a comment. Unknown or repeated keys are errors.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, VarianceFormula};
use crate::geometry::Point3;
use crate::montecarlo::{from_db, InitKind, SweepConfig};

const KEYS: &[&str] = &[
    "source",
    "half_width",
    "m_values",
    "sigma2_db",
    "sigma2",
    "sigma2_phi_db",
    "sigma2_phi",
    "equal_variance",
    "trials",
    "seed",
    "estimators",
    "fixed_scenario",
    "cis_max_iterations",
    "cis_tolerance",
    "cis_init",
    "variance_formula",
    "mle_max_iterations",
    "mle_tolerance",
    "k_max",
];

fn parse_f64(field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::config(field, format!("'{}' is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::config(field, format!("'{}' is not finite", s.trim())));
    }
    Ok(v)
}

fn parse_usize(field: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::config(field, format!("'{}' is not a non-negative integer", s.trim())))
}

fn parse_bool(field: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::config(field, format!("'{other}' is not a boolean"))),
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect()
}

/// Comma list of numbers or an inclusive `start:step:stop` range.
pub fn parse_f64_list(field: &str, s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(field, "range must be start:step:stop"));
        }
        let start = parse_f64(field, parts[0])?;
        let step = parse_f64(field, parts[1])?;
        let stop = parse_f64(field, parts[2])?;
        if step == 0.0 || (stop - start) * step < 0.0 {
            return Err(Error::config(field, "range step must move from start towards stop"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    split_list(s).into_iter().map(|t| parse_f64(field, t)).collect()
}

fn parse_usize_list(field: &str, s: &str) -> Result<Vec<usize>> {
    parse_f64_list(field, s)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(field, format!("{v} is not a non-negative integer")))
            }
        })
        .collect()
}

fn parse_point(field: &str, s: &str) -> Result<Point3> {
    let v = split_list(s)
        .into_iter()
        .map(|t| parse_f64(field, t))
        .collect::<Result<Vec<_>>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Point3::new(*x, *y, *z)),
        _ => Err(Error::config(field, "expected three comma-separated coordinates")),
    }
}

fn parse_variance_formula(s: &str) -> Result<VarianceFormula> {
    match s.trim().to_ascii_lowercase().as_str() {
        "squared-sum" => Ok(VarianceFormula::SquaredSum),
        "mean-absolute" | "consistent" => Ok(VarianceFormula::MeanAbsolute),
        other => Err(Error::config(
            "variance_formula",
            format!("unknown formula '{other}' (expected squared-sum or mean-absolute)"),
        )),
    }
}

fn apply(cfg: &mut SweepConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "source" => cfg.source = parse_point(key, value)?,
        "half_width" => cfg.half_width = parse_f64(key, value)?,
        "m_values" => cfg.m_values = parse_usize_list(key, value)?,
        "sigma2_db" => {
            cfg.sigma2 = parse_f64_list(key, value)?.into_iter().map(from_db).collect()
        }
        "sigma2" => cfg.sigma2 = parse_f64_list(key, value)?,
        "sigma2_phi_db" => cfg.sigma2_phi = Some(from_db(parse_f64(key, value)?)),
        "sigma2_phi" => cfg.sigma2_phi = Some(parse_f64(key, value)?),
        "equal_variance" => cfg.equal_variance = parse_bool(key, value)?,
        "trials" => cfg.trials = parse_usize(key, value)?,
        "seed" => {
            cfg.seed = value
                .trim()
                .parse()
                .map_err(|_| Error::config(key, format!("'{}' is not a 64-bit unsigned integer", value.trim())))?
        }
        "estimators" => {
            cfg.estimators = split_list(value)
                .into_iter()
                .map(str::parse)
                .collect::<Result<Vec<EstimatorKind>>>()?
        }
        "fixed_scenario" => cfg.fixed_scenario = parse_bool(key, value)?,
        "cis_max_iterations" => cfg.cis.max_iterations = parse_usize(key, value)?,
        "cis_tolerance" => cfg.cis.position_tolerance = parse_f64(key, value)?,
        "cis_init" => cfg.cis_init = InitKind::parse(value)?,
        "variance_formula" => cfg.cis.variance_formula = parse_variance_formula(value)?,
        "mle_max_iterations" => cfg.mle.max_iterations = parse_usize(key, value)?,
        "mle_tolerance" => cfg.mle.tolerance = parse_f64(key, value)?,
        "k_max" => cfg.k_max = parse_usize(key, value)?,
        _ => unreachable!("key list checked by caller"),
    }
    Ok(())
}

/// Parses and validates a sweep configuration. Keys not given keep the
/// [`SweepConfig::default`] values, except `m_values` and one of
/// `sigma2_db`/`sigma2`, which are required.
pub fn parse_sweep_config(text: &str) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::parse(line_no, format!("unknown key '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(line_no, format!("duplicate key '{key}'")));
        }
        apply(&mut cfg, key, value).map_err(|e| match e {
            Error::InvalidConfig { field, message } => {
                Error::parse(line_no, format!("{field}: {message}"))
            }
            other => other,
        })?;
    }
    if seen.contains("sigma2_db") && seen.contains("sigma2") {
        return Err(Error::config("sigma2", "give either sigma2_db or sigma2, not both"));
    }
    if seen.contains("sigma2_phi_db") && seen.contains("sigma2_phi") {
        return Err(Error::config("sigma2_phi", "give either sigma2_phi_db or sigma2_phi, not both"));
    }
    if !seen.contains("m_values") {
        return Err(Error::config("m_values", "missing"));
    }
    if !seen.contains("sigma2_db") && !seen.contains("sigma2") {
        return Err(Error::config("sigma2_db", "missing"));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sweep_config(&text)
}
