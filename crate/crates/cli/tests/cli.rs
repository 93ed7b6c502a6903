//   Copyright 2026 zonosafe developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.

//! End-to-end runs of the `zonosafe` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_zonosafe");

fn example() -> Value {
    let out = Command::new(BIN).arg("example-config").output().unwrap();
    assert!(out.status.success());
    serde_json::from_slice(&out.stdout).unwrap()
}

/// The benchmark with the sheared safe set `|x₁ + 0.625x₂| ≤ 1, |0.625x₂| ≤ 1`.
fn shaped() -> Value {
    let mut c = example();
    c["safe_set"] = json!({
        "kind": "polytope",
        "set": {
            "dim": 2,
            "num_halfspaces": 4,
            "H": [[1.0, 0.625], [0.0, 0.625], [-1.0, -0.625], [0.0, -0.625]],
            "h_rhs": [1.0, 1.0, 1.0, 1.0]
        }
    });
    c
}

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn out(&self) -> PathBuf {
        self.path("out")
    }

    fn config(&self, name: &str, cfg: &Value) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        p
    }

    fn zonosafe(&self, args: &[&str]) -> Output {
        Command::new(BIN).args(args).arg("--out").arg(self.out()).env_remove("ZONOSAFE_OUT").output().unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses a `t0,t1,…` matrix file.
fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

/// `det(M Mᵀ)` of a 3-row matrix, by cofactor expansion.
fn gram_det3(m: &[Vec<f64>]) -> f64 {
    let g = |i: usize, j: usize| m[i].iter().zip(&m[j]).map(|(a, b)| a * b).sum::<f64>();
    let a = [[g(0, 0), g(0, 1), g(0, 2)], [g(1, 0), g(1, 1), g(1, 2)], [g(2, 0), g(2, 1), g(2, 2)]];
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("solve_ms");
            m.remove("runtime_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_writes_informative_data_deterministically() {
    let run = Run::new();
    let cfg = run.config("c.json", &example());
    let o = run.zonosafe(&["generate", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("full row rank"));
    let data = run.out().join("dataset");
    let x0 = read_matrix(&data.join("X0.csv"));
    let u0 = read_matrix(&data.join("U0.csv"));
    assert_eq!((x0.len(), x0[0].len(), u0.len()), (2, 10, 1));
    let d0 = vec![x0[0].clone(), x0[1].clone(), u0[0].clone()];
    assert!(gram_det3(&d0) > 1e-9);
    assert!(data.join("hidden").join("W0.csv").exists());
    let public = std::fs::read_to_string(data.join("data.json")).unwrap();
    assert!(!public.contains("W0") && !public.contains("A_true"));

    let names = ["U0.csv", "X.csv", "X0.csv", "X1.csv", "data.json", "hidden/W0.csv", "hidden/dataset.json"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(data.join(n)).unwrap()).collect();
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let second: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(data.join(n)).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn too_few_samples_is_config_error() {
    let run = Run::new();
    let mut c = example();
    c["data"]["T"] = json!(2);
    let o = run.zonosafe(&["generate", s(&run.config("c.json", &c))]);
    assert_eq!(code(&o), 30);
    assert!(stderr(&o).contains("data.T"));
}

#[test]
fn malformed_config_names_field() {
    let run = Run::new();
    let mut c = example();
    c["synthesis"]["lamda"] = json!(0.9);
    let o = run.zonosafe(&["generate", s(&run.config("c.json", &c))]);
    assert_eq!(code(&o), 30);
    assert!(stderr(&o).contains("synthesis") && stderr(&o).contains("lamda"), "{}", stderr(&o));

    let mut c = example();
    c["disturbance"] = json!({"family": "box", "b": "wide"});
    let o = run.zonosafe(&["generate", s(&run.config("c.json", &c))]);
    assert_eq!(code(&o), 30);
    assert!(stderr(&o).contains("disturbance"), "{}", stderr(&o));

    let o = run.zonosafe(&["synthesize", s(&run.path("missing.json"))]);
    assert_eq!(code(&o), 30);
}

#[test]
fn synthesize_before_generate_is_config_error() {
    let run = Run::new();
    let o = run.zonosafe(&["synthesize", s(&run.config("c.json", &shaped()))]);
    assert_eq!(code(&o), 30);
    assert!(stderr(&o).contains("generate"));
}

#[test]
fn synthesize_certifies_with_prior() {
    let run = Run::new();
    let cfg = run.config("c.json", &shaped());
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["synthesize", s(&cfg), "--use-prior"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rec = read_json(&run.out().join("synthesis_with_prior.json"));
    assert_eq!(rec["certified"], json!(true));
    assert_eq!(rec["result"]["status"], json!("feasible"));
    assert_eq!(rec["result"]["use_prior"], json!(true));
    assert_eq!(rec["audit"]["violations"], json!(0));
    assert!(rec["audit"]["tested"].as_u64().unwrap() >= 10_000);
    assert_eq!(rec["result"]["k"].as_array().unwrap().len(), 1);
}

#[test]
fn unit_box_example_is_infeasible() {
    let run = Run::new();
    let cfg = run.config("c.json", &example());
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["synthesize", s(&cfg)]);
    assert_eq!(code(&o), 10, "{}", stderr(&o));
    let rec = read_json(&run.out().join("synthesis_with_prior.json"));
    assert_eq!(rec["result"]["status"], json!("infeasible"));
    assert_eq!(rec["certified"], json!(false));
}

#[test]
fn large_disturbance_without_prior_is_infeasible() {
    let run = Run::new();
    let mut c = shaped();
    c["disturbance"]["b"] = json!(0.08);
    c["synthesis"]["lambda"] = json!(0.98);
    let cfg = run.config("c.json", &c);
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["synthesize", s(&cfg), "--no-prior"]);
    assert_eq!(code(&o), 10, "{}", stderr(&o));
    assert!(run.out().join("synthesis_without_prior.json").exists());
}

#[test]
fn synthesize_is_reproducible() {
    let run = Run::new();
    let cfg = run.config("c.json", &shaped());
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let path = run.out().join("synthesis_without_prior.json");
    let mut results = Vec::new();
    for _ in 0..2 {
        assert_eq!(code(&run.zonosafe(&["synthesize", s(&cfg), "--no-prior", "--bound-mode", "paper"])), 0);
        let mut v = read_json(&path);
        strip_timing(&mut v);
        results.push(v);
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0]["result"]["bound_mode"], json!("paper"));
}

fn frontier(summary: &Value, key: &str) -> Option<f64> {
    summary[key].as_f64()
}

#[test]
fn lambda_sweep_prior_lowers_frontier() {
    let run = Run::new();
    let mut c = shaped();
    c["disturbance"]["b"] = json!(0.04);
    let cfg = run.config("c.json", &c);
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg), "--seed", "2"])), 0);
    let o = run.zonosafe(&["sweep", s(&cfg), "--sweep", "lambda", "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_json(&run.out().join("sweep_lambda_summary.json"));
    let with = frontier(&summary, "frontier_with_prior").expect("with-prior frontier exists");
    let without = frontier(&summary, "frontier_without_prior").unwrap_or(f64::INFINITY);
    assert!(with <= without + 1e-3, "{with} vs {without}");
    let csv = std::fs::read_to_string(run.out().join("sweep_lambda.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("mode,lambda,status"));
    assert_eq!(csv.lines().count(), 1 + 2 * 7);
}

#[test]
fn b_sweep_prior_raises_frontier() {
    let run = Run::new();
    let mut c = shaped();
    c["synthesis"]["lambda"] = json!(0.98);
    let cfg = run.config("c.json", &c);
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["sweep", s(&cfg), "--sweep", "b", "--tol", "1e-3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = read_json(&run.out().join("sweep_b_summary.json"));
    let with = frontier(&summary, "frontier_with_prior").expect("with-prior frontier exists");
    let without = frontier(&summary, "frontier_without_prior").unwrap_or(f64::NEG_INFINITY);
    assert!(with >= without - 1e-3, "{with} vs {without}");
    assert_eq!(summary["fixed"], json!(0.98));
}

#[test]
fn sweep_of_one_point_and_job_count_independence() {
    let run = Run::new();
    let mut c = shaped();
    c["synthesis"]["sweep"] = json!({"lambda": [0.95]});
    let cfg = run.config("c.json", &c);
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["sweep", s(&cfg), "--sweep", "lambda", "--use-prior", "--jobs", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let one = std::fs::read_to_string(run.out().join("sweep_lambda.csv")).unwrap();
    assert_eq!(one.lines().collect::<Vec<_>>(), vec!["mode,lambda,status", "with_prior,0.95,feasible"]);

    let mut c = shaped();
    c["synthesis"]["sweep"] = json!({"lambda": [0.8, 0.85, 0.9, 0.95, 0.98]});
    let cfg = run.config("c.json", &c);
    let mut files = Vec::new();
    for jobs in ["1", "4"] {
        assert_eq!(code(&run.zonosafe(&["sweep", s(&cfg), "--sweep", "lambda", "--jobs", jobs])), 0);
        let mut v = read_json(&run.out().join("sweep_lambda_summary.json"));
        strip_timing(&mut v);
        files.push((std::fs::read_to_string(run.out().join("sweep_lambda.csv")).unwrap(), v));
    }
    assert_eq!(files[0], files[1]);
}

/// Generates, synthesizes with the prior and returns the result path.
fn certified(run: &Run, cfg: &Path) -> PathBuf {
    assert_eq!(code(&run.zonosafe(&["generate", s(cfg)])), 0);
    assert_eq!(code(&run.zonosafe(&["synthesize", s(cfg)])), 0);
    run.out().join("synthesis_with_prior.json")
}

/// `(run, t, safe)` per data row.
fn trajectory_rows(path: &Path) -> (String, Vec<(usize, usize, u8)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[f.len() - 1].parse().unwrap())
        })
        .collect();
    (header, rows)
}

#[test]
fn trajectories_of_certified_gain_stay_safe() {
    let run = Run::new();
    let cfg = run.config("c.json", &shaped());
    let result = certified(&run, &cfg);
    let o = run.zonosafe(&["trajectory", s(&cfg), s(&result), "--horizon", "50", "--runs", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (header, rows) = trajectory_rows(&run.out().join("trajectories.csv"));
    assert_eq!(header, "run,t,x1,x2,safe");
    assert_eq!(rows.len(), 5 * 50);
    assert!(rows.iter().all(|r| r.2 == 1));
    assert_eq!(rows.iter().map(|r| r.1).max(), Some(49));

    let o = run.zonosafe(&["trajectory", s(&cfg), s(&result), "--horizon", "0"]);
    assert_eq!(code(&o), 0);
    let (_, rows) = trajectory_rows(&run.out().join("trajectories.csv"));
    assert!(rows.is_empty());
}

#[test]
fn uncertified_gain_needs_force() {
    let run = Run::new();
    let cfg = run.config("c.json", &shaped());
    let result = certified(&run, &cfg);
    let mut rec = read_json(&result);
    rec["certified"] = json!(false);
    rec["result"]["k"] = json!([[3.0, 3.0]]);
    let forged = run.path("forged.json");
    std::fs::write(&forged, rec.to_string()).unwrap();

    let o = run.zonosafe(&["trajectory", s(&cfg), s(&forged), "--horizon", "20", "--runs", "3"]);
    assert_eq!(code(&o), 20);
    let o = run.zonosafe(&["trajectory", s(&cfg), s(&forged), "--horizon", "20", "--runs", "3", "--force"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = trajectory_rows(&run.out().join("trajectories.csv"));
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().any(|r| r.2 == 0));
}

#[test]
fn validate_accepts_certified_and_rejects_bad_gain() {
    let run = Run::new();
    let cfg = run.config("c.json", &shaped());
    let result = certified(&run, &cfg);
    let o = run.zonosafe(&["validate", s(&cfg), s(&result)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = read_json(&run.out().join("validation.json"));
    assert_eq!(report["passed"], json!(true));
    assert_eq!(report["invariance"]["violations"], json!(0));

    let mut rec = read_json(&result);
    rec["result"]["k"] = json!([[0.0, 0.0]]);
    let bad = run.path("bad.json");
    std::fs::write(&bad, rec.to_string()).unwrap();
    let o = run.zonosafe(&["validate", s(&cfg), s(&bad)]);
    assert_eq!(code(&o), 20);
    assert_eq!(read_json(&run.out().join("validation.json"))["passed"], json!(false));

    rec["result"]["status"] = json!("infeasible");
    rec["result"]["k"] = Value::Null;
    std::fs::write(&bad, rec.to_string()).unwrap();
    assert_eq!(code(&run.zonosafe(&["validate", s(&cfg), s(&bad)])), 10);
}

#[test]
fn output_directory_from_environment() {
    let run = Run::new();
    let cfg = run.config("c.json", &example());
    let target = run.path("from-env");
    let o = Command::new(BIN).args(["generate", s(&cfg)]).env("ZONOSAFE_OUT", &target).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(target.join("dataset").join("data.json").exists());
}

#[test]
fn czonotope_safe_set_end_to_end() {
    let run = Run::new();
    let mut c = shaped();
    // the same sheared set as an image of the unit box
    c["safe_set"] = json!({
        "kind": "czonotope",
        "set": {"dim": 2, "num_generators": 2, "num_constraints": 0,
                "center": [0.0, 0.0], "generators": [[1.0, -1.0], [0.0, 1.6]], "A": [], "b": []}
    });
    c["synthesis"]["method"] = json!("czonotope");
    c["synthesis"]["lambda"] = json!(0.9);
    let cfg = run.config("c.json", &c);
    assert_eq!(code(&run.zonosafe(&["generate", s(&cfg)])), 0);
    let o = run.zonosafe(&["synthesize", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let result = run.out().join("synthesis_with_prior.json");
    assert_eq!(read_json(&result)["result"]["method"], json!("czonotope"));
    let o = run.zonosafe(&["trajectory", s(&cfg), s(&result), "--horizon", "10", "--runs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&run.zonosafe(&["validate", s(&cfg), s(&result)])), 0);
}
