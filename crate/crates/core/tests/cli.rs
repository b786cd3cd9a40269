use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aoa3d::estimators::msd_ls_estimate;
use aoa3d::geometry::true_angles;
use aoa3d::io::{parse_measurements, parse_scenario, AngleUnit};
use aoa3d::{PlaneSet, Point3};

fn aoa3d(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoa3d"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> Vec<f64> {
    let line = text
        .lines()
        .find(|l| l.split_whitespace().next() == Some(key))
        .unwrap_or_else(|| panic!("no '{key}' in {text}"));
    line.split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--m", "20", "--half-width", "25", "--sigma2-db", "-20", "--seed", "7"];
    let o = aoa3d(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let sc1 = fs::read(dir.path().join("scenario.txt")).unwrap();
    let ms1 = fs::read(dir.path().join("measurements.txt")).unwrap();

    let scenario = parse_scenario(&String::from_utf8(sc1.clone()).unwrap()).unwrap();
    assert_eq!(scenario.uavs.len(), 20);
    let meas = parse_measurements(&String::from_utf8(ms1.clone()).unwrap(), AngleUnit::Degrees).unwrap();
    assert_eq!(meas.len(), 20);

    assert!(aoa3d(dir.path(), &args).status.success());
    assert_eq!(fs::read(dir.path().join("scenario.txt")).unwrap(), sc1);
    assert_eq!(fs::read(dir.path().join("measurements.txt")).unwrap(), ms1);

    let other = aoa3d(dir.path(), &["simulate", "--m", "20", "--sigma2-db", "-20", "--seed", "8"]);
    assert!(other.status.success());
    assert_ne!(fs::read(dir.path().join("measurements.txt")).unwrap(), ms1);
}

#[test]
fn single_uav_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = aoa3d(dir.path(), &["simulate", "--m", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("M >= 2"), "{}", stderr(&o));
}

#[test]
fn noiseless_files_give_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = aoa3d(
        dir.path(),
        &["simulate", "--m", "12", "--source", "3,-4,5", "--seed", "2", "--radians"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for est in ["cis", "msd-ls", "msd-tls", "ls", "mle"] {
        let o = aoa3d(
            dir.path(),
            &[
                "estimate",
                "--scenario",
                "scenario.txt",
                "--measurements",
                "measurements.txt",
                "--radians",
                "--estimator",
                est,
            ],
        );
        assert!(o.status.success(), "{est}: {}", stderr(&o));
        let out = stdout(&o);
        let p = field(&out, "position");
        let u = Point3::new(p[0], p[1], p[2]);
        assert!(u.distance(&Point3::new(3.0, -4.0, 5.0)) <= 1e-6, "{est}: {out}");
        assert!(field(&out, "error_m")[0] <= 1e-6);
        if est == "cis" {
            assert!(field(&out, "radius")[0] <= 1e-9);
            assert_eq!(field(&out, "iterations")[0], field(&out, "iterations")[0].trunc());
        }
    }
}

#[test]
fn estimate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aoa3d(dir.path(), &["simulate", "--m", "15", "--sigma2-db", "-15", "--seed", "11"])
        .status
        .success());
    let o = aoa3d(
        dir.path(),
        &[
            "estimate",
            "--scenario",
            "scenario.txt",
            "--measurements",
            "measurements.txt",
            "--estimator",
            "msd-ls",
            "--format",
            "json",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let pos = &doc["report"]["position"];

    let sc = parse_scenario(&fs::read_to_string(dir.path().join("scenario.txt")).unwrap()).unwrap();
    let meas = parse_measurements(
        &fs::read_to_string(dir.path().join("measurements.txt")).unwrap(),
        AngleUnit::Degrees,
    )
    .unwrap();
    let lib = msd_ls_estimate(&PlaneSet::build(&meas, &sc.uavs).unwrap()).unwrap().position;
    assert_eq!(pos["x"].as_f64().unwrap(), lib.x);
    assert_eq!(pos["y"].as_f64().unwrap(), lib.y);
    assert_eq!(pos["z"].as_f64().unwrap(), lib.z);
    assert_eq!(doc["estimator"], "msd-ls");
}

#[test]
fn collinear_geometry_is_rank_deficient() {
    let dir = tempfile::tempdir().unwrap();
    let uavs = [Point3::new(1.0, 2.0, 3.0), Point3::new(2.0, 4.0, 6.0), Point3::new(-1.5, -3.0, -4.5)];
    let mut scenario = String::from("# aoa-scenario v1\nsource 0 0 0\n");
    let mut meas = String::from("# aoa-measurements v1\n");
    for u in &uavs {
        scenario.push_str(&format!("uav {} {} {}\n", u.x, u.y, u.z));
        let a = true_angles(&Point3::ORIGIN, u).unwrap();
        meas.push_str(&format!("{} {}\n", a.azimuth().to_degrees(), a.elevation().to_degrees()));
    }
    fs::write(dir.path().join("s.txt"), scenario).unwrap();
    fs::write(dir.path().join("m.txt"), meas).unwrap();
    let o = aoa3d(
        dir.path(),
        &["estimate", "--scenario", "s.txt", "--measurements", "m.txt", "--estimator", "msd-ls"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("rank"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = aoa3d(dir.path(), &["crlb", "--scenario", "nope.txt", "--sigma2-db", "-20"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn crlb_prints_matrix_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    assert!(aoa3d(dir.path(), &["simulate", "--m", "20", "--seed", "4"]).status.success());
    let o = aoa3d(dir.path(), &["crlb", "--scenario", "scenario.txt", "--sigma2-db", "-20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let trace = field(&out, "trace_m2")[0];
    let trace_db = field(&out, "trace_db")[0];
    assert!((10.0 * trace.log10() - trace_db).abs() < 1e-9);
    let o10 = aoa3d(dir.path(), &["crlb", "--scenario", "scenario.txt", "--sigma2-db", "-10"]);
    let db10 = field(&stdout(&o10), "trace_db")[0];
    assert!((db10 - trace_db - 10.0).abs() < 1e-9);
}

#[test]
fn empty_sigma_list_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "m_values = 20\nsigma2_db =\n").unwrap();
    let o = aoa3d(dir.path(), &["bench", "--config", "c.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma2_db"), "{}", stderr(&o));
}

#[test]
fn bad_config_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "m_values = 20\nsigma2_db = -20\ntrails = 10\n").unwrap();
    let o = aoa3d(dir.path(), &["bench", "--config", "c.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn bench_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.cfg"),
        "m_values = 8\nsigma2_db = -20, -10\ntrials = 50\nestimators = cis, msd-ls\n",
    )
    .unwrap();
    let csv = aoa3d(dir.path(), &["bench", "--config", "c.cfg", "--output", "out.csv"]);
    assert!(csv.status.success(), "{}", stderr(&csv));
    // one summary line per cell
    assert_eq!(stdout(&csv).lines().count(), 4);
    let json = aoa3d(dir.path(), &["bench", "--config", "c.cfg", "--format", "json"]);
    assert!(json.status.success());

    let text = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    for (line, row) in rows.iter().zip(doc["rows"].as_array().unwrap()) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], row["estimator"].as_str().unwrap());
        assert_eq!(cols[3].parse::<f64>().unwrap(), row["mse_m2"].as_f64().unwrap());
    }
}

#[test]
fn convergence_writes_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.cfg"),
        "m_values = 10\nsigma2_db = -30\ntrials = 40\nestimators = cis\nk_max = 4\n",
    )
    .unwrap();
    let o = aoa3d(dir.path(), &["convergence", "--config", "c.cfg", "--init", "random", "--k-max", "6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.starts_with("random,10,")));
}
