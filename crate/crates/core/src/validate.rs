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

//! A-posteriori checks of synthesized gains against a known true system, and
//! sampling falsification of containment claims.
//!
//! These functions take the true model, so they belong to the experiment
//! harness and are never called by synthesis.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{CzSampler, LinearSystem};
use crate::error::{dim_err, Error, Result};
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{Mat, Vector};
use crate::setops::{ConstrainedZonotope, Polytope};
use crate::synthesis::SafeSet;

/// Margin below which a test point counts as a violation.
pub const AUDIT_TOL: f64 = 1e-8;

/// Upper limit on enumerated vertex candidates.
pub const VERTEX_LIMIT: usize = 100_000;

/// Outcome of an audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub method: String,
    pub lambda: f64,
    pub tested: usize,
    pub violations: usize,
    /// Smallest margin seen (absolute units of the safe-set offsets).
    pub worst_margin: f64,
    /// Vertices were enumerated; when false only samples were tested.
    pub exhaustive: bool,
    pub runtime_ms: f64,
    pub counterexample: Option<Vec<f64>>,
}

impl ValidationReport {
    fn new(method: &str, lambda: f64) -> Self {
        Self {
            method: method.into(),
            lambda,
            tested: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            exhaustive: false,
            runtime_ms: 0.0,
            counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, margin: f64, point: &Vector) {
        self.tested += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        if margin < -AUDIT_TOL {
            self.violations += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(point.iter().copied().collect());
            }
        }
    }
}

/// `max_{w ∈ Z} dᵀw`.
pub fn cz_support(z: &ConstrainedZonotope, dir: &Vector) -> Result<f64> {
    if dir.len() != z.dim() {
        return dim_err(format!("direction of length {} for a set in R^{}", dir.len(), z.dim()));
    }
    let weights = z.generators().transpose() * dir;
    let offset = dir.dot(z.center());
    if z.num_constraints() == 0 {
        return Ok(offset + weights.abs().sum());
    }
    let s = z.num_generators();
    let mut p = LpProblem::new();
    let zeta = p.add_block("zeta", s, 1, -1.0, 1.0);
    for r in 0..z.num_constraints() {
        let mut e = LinExpr::new();
        for i in 0..s {
            e.add_term(zeta.at(i, 0), z.constraint_matrix()[(r, i)]);
        }
        p.eq(&e, z.constraint_vector()[r]);
    }
    let mut obj = LinExpr::constant(offset);
    for i in 0..s {
        obj.add_term(zeta.at(i, 0), weights[i]);
    }
    p.maximize(obj);
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        LpStatus::Infeasible => Err(Error::EmptySet("disturbance set".into())),
        other => Err(Error::Lp(format!("support program ended with {other:?}"))),
    }
}

/// Uniform samples from a bounded polytope by bounding-box rejection.
#[derive(Clone, Debug)]
pub struct PolytopeSampler {
    poly: Polytope,
    lo: Vector,
    hi: Vector,
}

impl PolytopeSampler {
    pub const MAX_TRIES: usize = 1_000_000;

    pub fn new(poly: &Polytope) -> Result<Self> {
        let (lo, hi) = poly.bounding_box()?;
        Ok(Self { poly: poly.clone(), lo, hi })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        for _ in 0..Self::MAX_TRIES {
            let x = Vector::from_fn(self.lo.len(), |i, _| {
                if self.hi[i] > self.lo[i] {
                    rng.gen_range(self.lo[i]..=self.hi[i])
                } else {
                    self.lo[i]
                }
            });
            if self.poly.contains(&x, 0.0) {
                return Ok(x);
            }
        }
        Err(Error::Precondition("rejection sampling found no interior point".into()))
    }
}

fn margins(safe: &Polytope, lambda: f64, y: &Vector) -> f64 {
    let v = safe.offsets() * lambda - safe.normals() * y;
    v.min()
}

/// λ-contractivity of `safe` under `x⁺ = (A + BK)x + w`.
///
/// For `n ≤ 3` every vertex is tested against the exact worst disturbance of
/// each halfspace (the support of `Zw`, i.e. the maximum over its extreme
/// points); then `samples` pairs `(x, w)` are drawn, `x` uniform in `safe`.
pub fn check_contractive(
    sys: &LinearSystem,
    k: &Mat,
    safe: &Polytope,
    zw: &ConstrainedZonotope,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let start = Instant::now();
    let acl = sys.closed_loop(k)?;
    if safe.dim() != sys.state_dim() || zw.dim() != sys.state_dim() {
        return dim_err("safe set, disturbance set and system dimensions differ");
    }
    if safe.is_empty()? {
        return Err(Error::Precondition("safe set is empty".into()));
    }
    let mut report = ValidationReport::new("contractive", lambda);
    let h = safe.normals();
    let worst_w = Vector::from_fn(safe.num_halfspaces(), |j, _| cz_support(zw, &h.row(j).transpose()).unwrap_or(f64::NAN));
    if worst_w.iter().any(|v| v.is_nan()) {
        return Err(Error::EmptySet("disturbance set".into()));
    }
    if sys.state_dim() <= 3 {
        if let Some(vertices) = safe.vertices(VERTEX_LIMIT) {
            report.exhaustive = true;
            for x in vertices {
                let hx = h * (&acl * &x);
                let m = (0..safe.num_halfspaces()).map(|j| lambda * safe.offsets()[j] - hx[j] - worst_w[j]).fold(f64::INFINITY, f64::min);
                report.record(m, &x);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = PolytopeSampler::new(safe)?;
    let mut ws = CzSampler::new(zw)?.with_boundary_bias(0.5);
    for _ in 0..samples {
        let x = xs.sample(&mut rng)?;
        let next = &acl * &x + ws.sample(&mut rng);
        report.record(margins(safe, lambda, &next), &x);
    }
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// `1 − min{‖ζ‖∞ : x = λGζ + c, Aζ = λb}`; negative outside `λ·safe`.
fn level_margin(safe: &ConstrainedZonotope, lambda: f64, x: &Vector) -> Result<f64> {
    let s = safe.num_generators();
    let mut p = LpProblem::new();
    let zeta = p.add_free_block("zeta", s, 1);
    let t = p.add_var("t", 0.0, f64::INFINITY);
    for r in 0..safe.dim() {
        let mut e = LinExpr::new();
        for i in 0..s {
            e.add_term(zeta.at(i, 0), lambda * safe.generators()[(r, i)]);
        }
        p.eq(&e, x[r] - safe.center()[r]);
    }
    for r in 0..safe.num_constraints() {
        let mut e = LinExpr::new();
        for i in 0..s {
            e.add_term(zeta.at(i, 0), safe.constraint_matrix()[(r, i)]);
        }
        p.eq(&e, lambda * safe.constraint_vector()[r]);
    }
    let rows: Vec<Vec<LinExpr>> = (0..s).map(|i| vec![LinExpr::var(zeta.at(i, 0))]).collect();
    p.add_abs_bound(&rows, &vec![LinExpr::var(t); s]);
    p.minimize(LinExpr::var(t));
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(1.0 - sol.value(t)),
        LpStatus::Infeasible => Ok(f64::NEG_INFINITY),
        other => Err(Error::Lp(format!("level program ended with {other:?}"))),
    }
}

fn cube_corners(s: usize) -> Vec<Vector> {
    (0..1usize << s).map(|mask| Vector::from_fn(s, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })).collect()
}

/// λ-contractivity for a constrained-zonotope safe set. Margins are in
/// factor units (`1 − ‖ζ‖∞` of the representation in `λ·safe`). Factor-cube
/// corners are enumerated when both sets are plain zonotopes with at most
/// 14 generators in total.
pub fn check_contractive_czono(
    sys: &LinearSystem,
    k: &Mat,
    safe: &ConstrainedZonotope,
    zw: &ConstrainedZonotope,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let start = Instant::now();
    let acl = sys.closed_loop(k)?;
    let mut report = ValidationReport::new("contractive_czonotope", lambda);
    if safe.is_zonotope() && zw.is_zonotope() && safe.num_generators() + zw.num_generators() <= 14 {
        report.exhaustive = true;
        for zx in cube_corners(safe.num_generators()) {
            let x = safe.point_from_factors(&zx);
            let ax = &acl * &x;
            for zz in cube_corners(zw.num_generators()) {
                let next = &ax + zw.point_from_factors(&zz);
                report.record(level_margin(safe, lambda, &next)?, &x);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = CzSampler::new(safe)?.with_boundary_bias(0.3);
    let mut ws = CzSampler::new(zw)?.with_boundary_bias(0.5);
    for _ in 0..samples {
        let x = xs.sample(&mut rng);
        let next = &acl * &x + ws.sample(&mut rng);
        report.record(level_margin(safe, lambda, &next)?, &x);
    }
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Dispatches to the audit matching the safe-set representation.
pub fn check_contractive_safe_set(
    sys: &LinearSystem,
    k: &Mat,
    safe: &SafeSet,
    zw: &ConstrainedZonotope,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    match safe {
        SafeSet::Polytope(p) => check_contractive(sys, k, p, zw, lambda, samples, seed),
        SafeSet::Czonotope(c) => check_contractive_czono(sys, k, c, zw, lambda, samples, seed),
    }
}

/// One closed-loop trajectory `x(0), …, x(horizon)` with sampled disturbances.
pub fn rollout<R: Rng + ?Sized>(acl: &Mat, x0: &Vector, ws: &mut CzSampler, horizon: usize, rng: &mut R) -> Mat {
    let mut x = Mat::zeros(x0.len(), horizon + 1);
    x.set_column(0, x0);
    for t in 0..horizon {
        let next = acl * x.column(t) + ws.sample(rng);
        x.set_column(t + 1, &next);
    }
    x
}

/// Robust invariance by simulation: `runs` trajectories from uniform safe
/// initial states must stay in `safe` for `horizon` steps.
pub fn check_ris(
    sys: &LinearSystem,
    k: &Mat,
    safe: &Polytope,
    zw: &ConstrainedZonotope,
    horizon: usize,
    runs: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let start = Instant::now();
    let acl = sys.closed_loop(k)?;
    let mut report = ValidationReport::new("ris", 1.0);
    if horizon == 0 {
        report.worst_margin = 0.0;
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = PolytopeSampler::new(safe)?;
    let mut ws = CzSampler::new(zw)?;
    for _ in 0..runs {
        let x0 = xs.sample(&mut rng)?;
        let traj = rollout(&acl, &x0, &mut ws, horizon, &mut rng);
        for t in 1..=horizon {
            let x = traj.column(t).into_owned();
            report.record(margins(safe, 1.0, &x), &x);
        }
    }
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Result of a sampling falsification of `C₁ ⊆ C₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tested: usize,
    pub consistent: bool,
    pub counterexample: Option<Vec<f64>>,
}

/// Samples `C₁` (with boundary bias) and tests membership in `C₂`.
pub fn oracle_containment(c1: &ConstrainedZonotope, c2: &ConstrainedZonotope, samples: usize, seed: u64) -> Result<OracleReport> {
    if c1.dim() != c2.dim() {
        return dim_err(format!("containment between R^{} and R^{}", c1.dim(), c2.dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = CzSampler::new(c1)?.with_boundary_bias(0.3);
    for i in 0..samples {
        let x = s.sample(&mut rng);
        if c2.contains_point(&x, crate::setops::MEMBERSHIP_TOL)?.is_none() {
            return Ok(OracleReport { tested: i + 1, consistent: false, counterexample: Some(x.iter().copied().collect()) });
        }
    }
    Ok(OracleReport { tested: samples, consistent: true, counterexample: None })
}

/// Writes trajectories as `run,t,x1,…,xn,safe`.
pub fn write_trajectories_csv(path: &Path, runs: &[Mat], safe: &SafeSet) -> Result<()> {
    let n = safe.dim();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let mut header = vec!["run".to_string(), "t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("safe".into());
    w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    for (run, traj) in runs.iter().enumerate() {
        if traj.nrows() != n {
            return dim_err(format!("trajectory with {} states for a safe set in R^{n}", traj.nrows()));
        }
        for (t, col) in traj.column_iter().enumerate() {
            let x = col.into_owned();
            let mut rec = vec![run.to_string(), t.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            rec.push((safe.contains(&x, AUDIT_TOL)? as u8).to_string());
            w.write_record(&rec).map_err(|e| Error::Io(e.into()))?;
        }
    }
    w.flush()?;
    Ok(())
}
