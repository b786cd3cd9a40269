//! CSV and JSON renderings of sweep and convergence results.
//!
//! Floating-point values carry 12 significant digits in both formats. Values
//! that are not finite (the dB of a zero MSE, an empty cell) are written as
//! `inf`/`-inf`/`nan` in CSV and `null` in JSON.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::montecarlo::{ConvergenceResult, SweepResult};

pub const SWEEP_COLUMNS: &str =
    "estimator,M,sigma2_db,mse_m2,mse_db,crlb_trace_m2,crlb_trace_db,mean_iters,failures,trials";
pub const CONVERGENCE_COLUMNS: &str =
    "initializer,M,sigma2_db,iteration,mse_m2,mse_db,failures,trials";

/// 12 significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}

fn json_num(x: f64) -> Value {
    if x.is_finite() {
        // round through the CSV text so both formats carry the same value
        json!(fmt_sig(x).parse::<f64>().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# aoa3d sweep seed={}", result.seed);
    let _ = writeln!(out, "{SWEEP_COLUMNS}");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimator,
            r.m,
            fmt_sig(r.sigma2_db),
            fmt_sig(r.mse_m2),
            fmt_sig(r.mse_db),
            fmt_sig(r.crlb_trace_m2),
            fmt_sig(r.crlb_trace_db),
            fmt_sig(r.mean_iters),
            r.failures,
            r.trials
        );
    }
    out
}

pub fn sweep_json(result: &SweepResult) -> String {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "estimator": r.estimator.id(),
                "M": r.m,
                "sigma2_db": json_num(r.sigma2_db),
                "mse_m2": json_num(r.mse_m2),
                "mse_db": json_num(r.mse_db),
                "crlb_trace_m2": json_num(r.crlb_trace_m2),
                "crlb_trace_db": json_num(r.crlb_trace_db),
                "mean_iters": json_num(r.mean_iters),
                "failures": r.failures,
                "trials": r.trials,
            })
        })
        .collect();
    let doc = json!({ "kind": "sweep", "seed": result.seed, "rows": rows });
    serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
}

pub fn convergence_csv(result: &ConvergenceResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# aoa3d convergence seed={}", result.seed);
    let _ = writeln!(out, "{CONVERGENCE_COLUMNS}");
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.initializer.id(),
            r.m,
            fmt_sig(r.sigma2_db),
            r.iteration,
            fmt_sig(r.mse_m2),
            fmt_sig(r.mse_db),
            r.failures,
            r.trials
        );
    }
    out
}

pub fn convergence_json(result: &ConvergenceResult) -> String {
    let rows: Vec<Value> = result
        .rows
        .iter()
        .map(|r| {
            json!({
                "initializer": r.initializer.id(),
                "M": r.m,
                "sigma2_db": json_num(r.sigma2_db),
                "iteration": r.iteration,
                "mse_m2": json_num(r.mse_m2),
                "mse_db": json_num(r.mse_db),
                "failures": r.failures,
                "trials": r.trials,
            })
        })
        .collect();
    let doc = json!({ "kind": "convergence", "seed": result.seed, "rows": rows });
    serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
}
