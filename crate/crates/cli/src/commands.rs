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

//! The experiment commands. Each writes its files under the output
//! directory and then reports infeasibility or audit failures as errors, so
//! the files exist whatever the exit status.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use zonosafe::closedloop::min_consistent_box_level;
use zonosafe::datagen::{excite, CzSampler, DataView};
use zonosafe::numerics::{rank, DEFAULT_TOL};
use zonosafe::setops::ConstrainedZonotope;
use zonosafe::synthesis::{
    max_disturbance, min_lambda, prior_free_variant, synthesize as run_synthesis, SafeSet, SynthesisResult,
    SynthesisSpec, SynthesisStatus,
};
use zonosafe::validate::{check_contractive_safe_set, check_ris, rollout, write_trajectories_csv, PolytopeSampler, ValidationReport};
use zonosafe::{Mat, Vector};

use crate::config::{DisturbanceConfig, ExperimentConfig};
use crate::error::{CliError, CliResult};

// Offsets separating the random streams derived from the one config seed.
const AUDIT_STREAM: u64 = 0x5eed_0001;
const RIS_STREAM: u64 = 0x5eed_0002;
const TRAJECTORY_STREAM: u64 = 0x5eed_0003;

pub fn dataset_dir(out: &Path) -> PathBuf {
    out.join("dataset")
}

/// The public data file, the only data input of synthesis.
pub fn public_data_path(out: &Path) -> PathBuf {
    dataset_dir(out).join("data.json")
}

pub fn result_path(out: &Path, use_prior: bool) -> PathBuf {
    out.join(if use_prior { "synthesis_with_prior.json" } else { "synthesis_without_prior.json" })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {what} {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Config(format!("{what} {} at `{}`: {}", path.display(), e.path(), e.inner())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub samples: usize,
    /// Rank of `[X0; U0]`.
    pub rank: usize,
    pub full_rank: bool,
    pub directory: PathBuf,
}

/// Simulates the true system and writes the public data view plus the
/// hidden disturbance realization.
pub fn generate(cfg: &ExperimentConfig, out: &Path) -> CliResult<GenerateReport> {
    let sys = cfg.true_system()?;
    let zw = cfg.disturbance.set(cfg.state_dim())?;
    let data = excite(&sys, &cfg.system.x0, cfg.data.t, cfg.data.u_range, &zw, cfg.data.seed)?;
    let dir = dataset_dir(out);
    data.write_csv(&dir)?;
    write_json(&public_data_path(out), &data.view())?;
    write_json(&dir.join("hidden").join("dataset.json"), &data)?;
    let d0 = data.d0();
    let r = rank(&d0, DEFAULT_TOL);
    let report = GenerateReport { samples: data.samples(), rank: r, full_rank: r == d0.nrows(), directory: dir };
    write_json(&out.join("generate.json"), &report)?;
    Ok(report)
}

pub fn load_view(out: &Path) -> CliResult<DataView> {
    let path = public_data_path(out);
    if !path.exists() {
        return Err(CliError::Config(format!("no dataset at {}; run `generate` first", path.display())));
    }
    read_json(&path, "dataset")
}

/// A synthesis result with the audit against the true system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub seed: u64,
    pub result: SynthesisResult,
    pub audit: Option<ValidationReport>,
    /// Feasible and the audit found no violation.
    pub certified: bool,
}

fn audit_gain(cfg: &ExperimentConfig, k: &Mat, zw: &ConstrainedZonotope, lambda: f64) -> CliResult<ValidationReport> {
    let sys = cfg.true_system()?;
    let seed = cfg.data.seed.wrapping_add(AUDIT_STREAM);
    Ok(check_contractive_safe_set(&sys, k, &cfg.safe_set, zw, lambda, cfg.audit.samples, seed)?)
}

fn audited(cfg: &ExperimentConfig, result: &SynthesisResult, zw: &ConstrainedZonotope) -> CliResult<Option<ValidationReport>> {
    match (&result.k, result.is_feasible()) {
        (Some(k), true) => Ok(Some(audit_gain(cfg, k, zw, result.lambda)?)),
        _ => Ok(None),
    }
}

/// Runs the configured synthesis on the public data, audits a feasible gain
/// and writes the record.
pub fn synthesize(cfg: &ExperimentConfig, out: &Path) -> CliResult<(PathBuf, SynthesisRecord)> {
    let spec = cfg.knowledge().spec(load_view(out)?)?;
    if let DisturbanceConfig::Box { b } = cfg.disturbance {
        if below_floor(b, consistency_floor(&spec)?) {
            eprintln!("warning: disturbance level {b} is below the smallest level consistent with the data");
        }
    }
    let result = run_synthesis(&spec)?;
    let zw = cfg.disturbance.set(cfg.state_dim())?;
    let audit = audited(cfg, &result, &zw)?;
    let certified = result.is_feasible() && audit.as_ref().is_some_and(|a| a.passed());
    let record = SynthesisRecord { seed: cfg.data.seed, result, audit, certified };
    let path = result_path(out, cfg.synthesis.use_prior);
    write_json(&path, &record)?;
    match record.result.status {
        SynthesisStatus::Infeasible => Err(CliError::Infeasible(format!("no gain at λ={}; record in {}", record.result.lambda, path.display()))),
        SynthesisStatus::Failure => Err(CliError::Numerical(format!(
            "{}; record in {}",
            record.result.diagnostics.message.clone().unwrap_or_else(|| "synthesis failed".into()),
            path.display()
        ))),
        SynthesisStatus::Feasible if !certified => {
            let worst = record.audit.as_ref().map_or(f64::NAN, |a| a.worst_margin);
            Err(CliError::Audit(format!("gain violates contractivity on the true system (worst margin {worst:.3e}); record in {}", path.display())))
        }
        SynthesisStatus::Feasible => Ok((path, record)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Lambda,
    B,
}

impl SweepKind {
    fn name(self) -> &'static str {
        match self {
            SweepKind::Lambda => "lambda",
            SweepKind::B => "b",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Feasible,
    Infeasible,
    Failure,
    AuditFailed,
    /// The box level is below the smallest one consistent with the data
    /// (and the prior, in the with-prior mode).
    Inconsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: String,
    pub value: f64,
    pub status: PointStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sweep: SweepKind,
    /// The parameter held fixed: the disturbance level (`None` for a
    /// non-box disturbance) or the contraction factor.
    pub fixed: Option<f64>,
    pub tol: f64,
    /// Smallest feasible λ, or largest feasible b.
    pub frontier_with_prior: Option<f64>,
    pub frontier_without_prior: Option<f64>,
    pub rows: Vec<SweepRow>,
}

fn mode_name(use_prior: bool) -> &'static str {
    if use_prior {
        "with_prior"
    } else {
        "without_prior"
    }
}

fn mode_spec(base: &SynthesisSpec, use_prior: bool) -> SynthesisSpec {
    if use_prior {
        base.clone().with_prior(true)
    } else {
        prior_free_variant(base)
    }
}

/// Smallest box level consistent with the data and the mode's prior.
fn consistency_floor(spec: &SynthesisSpec) -> CliResult<Option<f64>> {
    let model = if spec.use_prior { spec.prior.model() } else { None };
    Ok(min_consistent_box_level(&spec.data, model)?)
}

fn below_floor(b: f64, floor: Option<f64>) -> bool {
    floor.map_or(true, |f| b < f - 1e-9)
}

fn sweep_point(cfg: &ExperimentConfig, spec: &SynthesisSpec, kind: SweepKind, value: f64, floor: Option<f64>) -> CliResult<PointStatus> {
    let level = match (kind, &cfg.disturbance) {
        (SweepKind::B, _) => Some(value),
        (SweepKind::Lambda, DisturbanceConfig::Box { b }) => Some(*b),
        (SweepKind::Lambda, _) => None,
    };
    if level.is_some_and(|b| below_floor(b, floor)) {
        return Ok(PointStatus::Inconsistent);
    }
    let (spec, zw) = match kind {
        SweepKind::Lambda => (spec.clone().with_lambda(value)?, cfg.disturbance.set(cfg.state_dim())?),
        SweepKind::B => {
            let s = spec.clone().with_box_disturbance(value)?;
            let zw = s.prior.disturbance().clone();
            (s, zw)
        }
    };
    let result = run_synthesis(&spec)?;
    Ok(match result.status {
        SynthesisStatus::Infeasible => PointStatus::Infeasible,
        SynthesisStatus::Failure => PointStatus::Failure,
        SynthesisStatus::Feasible => match audited(cfg, &result, &zw)? {
            Some(a) if a.passed() => PointStatus::Feasible,
            _ => PointStatus::AuditFailed,
        },
    })
}

fn frontier(cfg: &ExperimentConfig, spec: &SynthesisSpec, kind: SweepKind) -> CliResult<Option<f64>> {
    let sweep = &cfg.synthesis.sweep;
    Ok(match kind {
        SweepKind::Lambda => min_lambda(spec, sweep.tol)?,
        SweepKind::B => max_disturbance(spec, sweep.tol, sweep.b_max)?,
    })
}

/// Grid statuses and frontier values for each requested prior mode.
///
/// Points run on a pool of `jobs` workers (all cores when `None`); results
/// keep grid order, so the files do not depend on the pool size.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, kind: SweepKind, modes: &[bool], jobs: Option<usize>) -> CliResult<(PathBuf, SweepSummary)> {
    if modes.contains(&true) && cfg.prior.model()?.is_none() {
        return Err(CliError::Config("prior: a with-prior sweep needs interval bounds".into()));
    }
    let base = cfg.knowledge().spec(load_view(out)?)?;
    let grid = match kind {
        SweepKind::Lambda => &cfg.synthesis.sweep.lambda,
        SweepKind::B => &cfg.synthesis.sweep.b,
    };
    let tasks: Vec<(bool, f64)> = modes.iter().flat_map(|&m| grid.iter().map(move |&v| (m, v))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    let (statuses, frontiers) = pool.install(|| {
        let floors: CliResult<Vec<Option<f64>>> = modes.par_iter().map(|&m| consistency_floor(&mode_spec(&base, m))).collect();
        let floors = floors?;
        let floor_of = |m: bool| floors[modes.iter().position(|&x| x == m).expect("task mode is listed")];
        let statuses: CliResult<Vec<PointStatus>> =
            tasks.par_iter().map(|&(m, v)| sweep_point(cfg, &mode_spec(&base, m), kind, v, floor_of(m))).collect();
        let frontiers: CliResult<Vec<Option<f64>>> = modes.par_iter().map(|&m| frontier(cfg, &mode_spec(&base, m), kind)).collect();
        Ok::<_, CliError>((statuses?, frontiers?))
    })?;
    let rows: Vec<SweepRow> = tasks
        .iter()
        .zip(statuses)
        .map(|(&(m, value), status)| SweepRow { mode: mode_name(m).into(), value, status })
        .collect();
    let pick = |want: bool| modes.iter().position(|&m| m == want).and_then(|i| frontiers[i]);
    let fixed = match (kind, &cfg.disturbance) {
        (SweepKind::Lambda, DisturbanceConfig::Box { b }) => Some(*b),
        (SweepKind::Lambda, _) => None,
        (SweepKind::B, _) => Some(cfg.synthesis.lambda),
    };
    let summary = SweepSummary {
        sweep: kind,
        fixed,
        tol: cfg.synthesis.sweep.tol,
        frontier_with_prior: pick(true),
        frontier_without_prior: pick(false),
        rows,
    };

    std::fs::create_dir_all(out)?;
    let csv_path = out.join(format!("sweep_{}.csv", kind.name()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::Config(format!("{}: {e}", csv_path.display())))?;
    let csv_err = |e: csv::Error| CliError::Config(format!("{}: {e}", csv_path.display()));
    w.write_record(["mode", kind.name(), "status"]).map_err(csv_err)?;
    for r in &summary.rows {
        let status = serde_json::to_value(r.status).expect("status serializes");
        w.write_record([r.mode.clone(), r.value.to_string(), status.as_str().unwrap_or_default().to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    write_json(&out.join(format!("sweep_{}_summary.json", kind.name())), &summary)?;

    let failed = summary.rows.iter().filter(|r| r.status == PointStatus::AuditFailed).count();
    if failed > 0 {
        return Err(CliError::Audit(format!("{failed} sweep points produced gains that fail the audit; see {}", csv_path.display())));
    }
    Ok((csv_path, summary))
}

pub fn load_record(path: &Path) -> CliResult<SynthesisRecord> {
    read_json(path, "result")
}

fn record_gain(record: &SynthesisRecord, path: &Path) -> CliResult<Mat> {
    match (&record.result.k, record.result.status) {
        (Some(k), SynthesisStatus::Feasible) => Ok(k.clone()),
        _ => Err(CliError::Infeasible(format!("{} holds no feasible gain", path.display()))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub runs: usize,
    pub horizon: usize,
    pub rows: usize,
    pub unsafe_rows: usize,
    pub certified: bool,
}

/// `runs` closed-loop rollouts of the true system from initial states drawn
/// in the safe set, `horizon` rows per run (`t = 0, …, horizon−1`).
///
/// Refuses an uncertified gain unless `force` is set.
pub fn trajectory(cfg: &ExperimentConfig, out: &Path, result: &Path, horizon: usize, runs: usize, force: bool) -> CliResult<(PathBuf, TrajectoryReport)> {
    let record = load_record(result)?;
    let k = record_gain(&record, result)?;
    if !record.certified && !force {
        return Err(CliError::Audit(format!("{} is not certified; pass --force to simulate anyway", result.display())));
    }
    let acl = cfg.true_system()?.closed_loop(&k)?;
    let mut ws = CzSampler::new(&cfg.disturbance.set(cfg.state_dim())?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.seed.wrapping_add(TRAJECTORY_STREAM));
    let mut draw_x0: Box<dyn FnMut(&mut ChaCha8Rng) -> CliResult<Vector>> = match &cfg.safe_set {
        SafeSet::Polytope(p) => {
            let s = PolytopeSampler::new(p)?;
            Box::new(move |rng| Ok(s.sample(rng)?))
        }
        SafeSet::Czonotope(c) => {
            let mut s = CzSampler::new(c)?;
            Box::new(move |rng| Ok(s.sample(rng)))
        }
    };
    let mut trajectories = Vec::new();
    if horizon > 0 {
        for _ in 0..runs {
            let x0 = draw_x0(&mut rng)?;
            trajectories.push(rollout(&acl, &x0, &mut ws, horizon - 1, &mut rng));
        }
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("trajectories.csv");
    write_trajectories_csv(&path, &trajectories, &cfg.safe_set)?;
    let mut unsafe_rows = 0;
    for traj in &trajectories {
        for col in traj.column_iter() {
            if !cfg.safe_set.contains(&col.into_owned(), zonosafe::validate::AUDIT_TOL)? {
                unsafe_rows += 1;
            }
        }
    }
    let report = TrajectoryReport { runs: trajectories.len(), horizon, rows: trajectories.len() * horizon, unsafe_rows, certified: record.certified };
    if record.certified && unsafe_rows > 0 {
        return Err(CliError::Audit(format!("{unsafe_rows} simulated states left the safe set under a certified gain")));
    }
    Ok((path, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub contractive: ValidationReport,
    /// Simulated invariance; polytopic safe sets only.
    pub invariance: Option<ValidationReport>,
    pub passed: bool,
}

/// Re-audits a stored gain: λ-contractivity and simulated invariance.
pub fn validate(cfg: &ExperimentConfig, out: &Path, result: &Path) -> CliResult<(PathBuf, ValidationSummary)> {
    let record = load_record(result)?;
    let k = record_gain(&record, result)?;
    let zw = cfg.disturbance.set(cfg.state_dim())?;
    let contractive = audit_gain(cfg, &k, &zw, record.result.lambda)?;
    let invariance = match &cfg.safe_set {
        SafeSet::Polytope(p) => {
            let seed = cfg.data.seed.wrapping_add(RIS_STREAM);
            Some(check_ris(&cfg.true_system()?, &k, p, &zw, cfg.audit.ris_horizon, cfg.audit.ris_runs, seed)?)
        }
        SafeSet::Czonotope(_) => None,
    };
    let passed = contractive.passed() && invariance.as_ref().map_or(true, |r| r.passed());
    let summary = ValidationSummary { contractive, invariance, passed };
    let path = out.join("validation.json");
    write_json(&path, &summary)?;
    if !passed {
        return Err(CliError::Audit(format!("gain fails validation; see {}", path.display())));
    }
    Ok((path, summary))
}
