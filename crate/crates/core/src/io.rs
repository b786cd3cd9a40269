//! Scenario and measurement text files.
//!
//! Scenario file:
//! ```text
//! # aoa-scenario v1
//! source 0 0 0
//! uav 12.5 -3 7
//! uav ...
//! ```
//! Measurement file (angles in the unit chosen by the caller):
//! ```text
//! # aoa-measurements v1
//! 23.1 -4.7
//! ...
//! ```
//! Lines starting with `#` after the header are comments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleMeasurementSet, AnglePair, Point3};
use crate::montecarlo::Scenario;

pub const SCENARIO_HEADER: &str = "# aoa-scenario v1";
pub const MEASUREMENTS_HEADER: &str = "# aoa-measurements v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AngleUnit {
    Radians,
    #[default]
    Degrees,
}

impl AngleUnit {
    pub fn to_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_radians(),
        }
    }

    pub fn from_radians(self, v: f64) -> f64 {
        match self {
            AngleUnit::Radians => v,
            AngleUnit::Degrees => v.to_degrees(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AngleUnit::Radians => "radians",
            AngleUnit::Degrees => "degrees",
        }
    }
}

/// Non-comment lines after the header, with 1-based line numbers.
fn body_lines<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, &'a str)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == header => {}
        _ => return Err(Error::parse(1, format!("expected header '{header}'"))),
    }
    Ok(lines
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn numbers(line_no: usize, fields: &[&str], expected: usize) -> Result<Vec<f64>> {
    if fields.len() != expected {
        return Err(Error::parse(
            line_no,
            format!("expected {expected} numbers, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("'{f}' is not a finite number")))
        })
        .collect()
}

pub fn write_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    let s = scenario.source;
    let _ = writeln!(out, "{SCENARIO_HEADER}");
    let _ = writeln!(out, "source {} {} {}", s.x, s.y, s.z);
    for u in &scenario.uavs {
        let _ = writeln!(out, "uav {} {} {}", u.x, u.y, u.z);
    }
    out
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut source = None;
    let mut uavs = Vec::new();
    for (line_no, line) in body_lines(text, SCENARIO_HEADER)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (tag, rest) = fields.split_first().expect("non-empty line");
        let v = numbers(line_no, rest, 3)?;
        let p = Point3::new(v[0], v[1], v[2]);
        match *tag {
            "source" if source.is_none() => source = Some(p),
            "source" => return Err(Error::parse(line_no, "duplicate source line")),
            "uav" => uavs.push(p),
            other => return Err(Error::parse(line_no, format!("unknown record '{other}'"))),
        }
    }
    let source = source.ok_or_else(|| Error::parse(1, "missing source line"))?;
    Scenario::new(source, uavs)
}

pub fn write_measurements(measurements: &AngleMeasurementSet, unit: AngleUnit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MEASUREMENTS_HEADER}");
    let _ = writeln!(out, "# unit: {}", unit.name());
    for p in measurements.pairs() {
        let _ = writeln!(
            out,
            "{} {}",
            unit.from_radians(p.azimuth()),
            unit.from_radians(p.elevation())
        );
    }
    out
}

pub fn parse_measurements(text: &str, unit: AngleUnit) -> Result<AngleMeasurementSet> {
    let mut pairs = Vec::new();
    for (line_no, line) in body_lines(text, MEASUREMENTS_HEADER)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let v = numbers(line_no, &fields, 2)?;
        let pair = AnglePair::new(unit.to_radians(v[0]), unit.to_radians(v[1]))
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        pairs.push(pair);
    }
    AngleMeasurementSet::new(pairs)
}
