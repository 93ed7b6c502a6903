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

//! Simulation of the true system and organization of experiment data.
//!
//! [`DataSet`] keeps the disturbance realization `W0` behind
//! [`DataSet::hidden_disturbances`]; synthesis code only ever receives a
//! [`DataView`], which carries `U0`, `X0`, `X1` (and `D0` on demand).

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{all_finite, row_rank_full, serde_rows, vstack, Mat, Vector, DEFAULT_TOL};
use crate::sampling::FactorSampler;
use crate::setops::ConstrainedZonotope;

/// Retries of [`excite`] before giving up on the rank condition.
pub const EXCITE_RETRIES: u64 = 8;

/// `x(t+1) = A x(t) + B u(t) + w(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    #[serde(with = "serde_rows", rename = "a_true")]
    a: Mat,
    #[serde(with = "serde_rows", rename = "b_true")]
    b: Mat,
}

impl LinearSystem {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.nrows() {
            return dim_err(format!("system matrices A {:?} and B {:?}", a.shape(), b.shape()));
        }
        if !all_finite(&a) || !all_finite(&b) {
            return Err(Error::InvalidArgument("system matrices must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    /// `[A B]`.
    pub fn theta(&self) -> Mat {
        crate::numerics::hstack(&[&self.a, &self.b]).expect("row counts agree")
    }

    /// `A + BK`.
    pub fn closed_loop(&self, k: &Mat) -> Result<Mat> {
        if k.shape() != (self.input_dim(), self.state_dim()) {
            return dim_err(format!("gain of shape {:?} for a system with n={}, m={}", k.shape(), self.state_dim(), self.input_dim()));
        }
        Ok(&self.a + &self.b * k)
    }
}

/// The synthesis-side view of an experiment: no disturbances, no true model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataView {
    #[serde(with = "serde_rows", rename = "U0")]
    u0: Mat,
    #[serde(with = "serde_rows", rename = "X0")]
    x0: Mat,
    #[serde(with = "serde_rows", rename = "X1")]
    x1: Mat,
}

impl DataView {
    pub fn new(u0: Mat, x0: Mat, x1: Mat) -> Result<Self> {
        let t = x0.ncols();
        if x1.shape() != x0.shape() || u0.ncols() != t {
            return dim_err(format!("data shapes U0 {:?}, X0 {:?}, X1 {:?}", u0.shape(), x0.shape(), x1.shape()));
        }
        Ok(Self { u0, x0, x1 })
    }

    pub fn samples(&self) -> usize {
        self.x0.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.x0.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.u0.nrows()
    }

    pub fn u0(&self) -> &Mat {
        &self.u0
    }

    pub fn x0(&self) -> &Mat {
        &self.x0
    }

    pub fn x1(&self) -> &Mat {
        &self.x1
    }

    /// `D0 = [X0; U0]`.
    pub fn d0(&self) -> Mat {
        vstack(&[&self.x0, &self.u0]).expect("column counts agree")
    }
}

/// One experiment: inputs, the full state trajectory and the (hidden)
/// disturbance realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    #[serde(with = "serde_rows", rename = "U0")]
    u0: Mat,
    #[serde(with = "serde_rows", rename = "X")]
    x: Mat,
    #[serde(with = "serde_rows", rename = "W0")]
    w0: Mat,
}

impl DataSet {
    pub fn samples(&self) -> usize {
        self.u0.ncols()
    }

    pub fn u0(&self) -> &Mat {
        &self.u0
    }

    /// `X = [x(0) … x(T)]`.
    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn x0(&self) -> Mat {
        self.x.columns(0, self.samples()).into_owned()
    }

    pub fn x1(&self) -> Mat {
        self.x.columns(1, self.samples()).into_owned()
    }

    pub fn d0(&self) -> Mat {
        vstack(&[&self.x0(), &self.u0]).expect("column counts agree")
    }

    /// The disturbance realization. Only for experiment harnesses and tests;
    /// it is not available to controller synthesis.
    pub fn hidden_disturbances(&self) -> &Mat {
        &self.w0
    }

    pub fn view(&self) -> DataView {
        DataView { u0: self.u0.clone(), x0: self.x0(), x1: self.x1() }
    }

    /// `‖X1 − A X0 − B U0 − W0‖∞`.
    pub fn reconstruction_error(&self, sys: &LinearSystem) -> f64 {
        let r = self.x1() - sys.a() * self.x0() - sys.b() * &self.u0 - &self.w0;
        r.abs().max()
    }

    /// Writes `U0.csv`, `X.csv`, `X0.csv`, `X1.csv` into `dir` and `W0.csv`
    /// into `dir/hidden`. Rows are matrix rows, columns are time indices.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("hidden"))?;
        write_matrix_csv(&dir.join("U0.csv"), &self.u0)?;
        write_matrix_csv(&dir.join("X.csv"), &self.x)?;
        write_matrix_csv(&dir.join("X0.csv"), &self.x0())?;
        write_matrix_csv(&dir.join("X1.csv"), &self.x1())?;
        write_matrix_csv(&dir.join("hidden").join("W0.csv"), &self.w0)?;
        Ok(())
    }
}

/// Header `t0,t1,…`, then one line per matrix row.
pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    let header: Vec<String> = (0..m.ncols()).map(|t| format!("t{t}")).collect();
    w.write_record(&header).map_err(|e| Error::Io(e.into()))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the recursion `x(t+1) = A x(t) + B u(t) + w(t)`.
pub fn simulate(sys: &LinearSystem, x0: &Vector, u_seq: &Mat, w_seq: &Mat) -> Result<DataSet> {
    let n = sys.state_dim();
    let t = u_seq.ncols();
    if x0.len() != n || u_seq.nrows() != sys.input_dim() || w_seq.shape() != (n, t) {
        return dim_err(format!(
            "simulate: x0 {}, inputs {:?}, disturbances {:?} for n={n}, m={}",
            x0.len(),
            u_seq.shape(),
            w_seq.shape(),
            sys.input_dim()
        ));
    }
    let mut x = Mat::zeros(n, t + 1);
    x.set_column(0, x0);
    for k in 0..t {
        let next = sys.a() * x.column(k) + sys.b() * u_seq.column(k) + w_seq.column(k);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Overflow(k + 1));
        }
        x.set_column(k + 1, &next);
    }
    Ok(DataSet { u0: u_seq.clone(), x, w0: w_seq.clone() })
}

/// Repeated draws from a constrained zonotope.
#[derive(Clone, Debug)]
pub struct CzSampler {
    set: ConstrainedZonotope,
    factors: FactorSampler,
}

impl CzSampler {
    pub fn new(set: &ConstrainedZonotope) -> Result<Self> {
        Ok(Self { set: set.clone(), factors: FactorSampler::new(set.constraint_matrix(), set.constraint_vector())? })
    }

    pub fn with_boundary_bias(mut self, p: f64) -> Self {
        self.factors = self.factors.with_boundary_bias(p);
        self
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vector {
        self.set.point_from_factors(&self.factors.sample(rng))
    }
}

/// One draw `Gζ + c`, ζ uniform on the cube (no constraints) or by
/// hit-and-run over the factor polytope.
pub fn sample_czonotope<R: Rng + ?Sized>(set: &ConstrainedZonotope, rng: &mut R) -> Result<Vector> {
    Ok(CzSampler::new(set)?.sample(rng))
}

/// Collects an informative experiment: inputs uniform in `[-u_range, u_range]`,
/// disturbances drawn from `zw`. Retries with fresh streams of the same seed
/// when `X0` lacks full row rank.
pub fn excite(sys: &LinearSystem, x0: &Vector, t: usize, u_range: f64, zw: &ConstrainedZonotope, seed: u64) -> Result<DataSet> {
    let n = sys.state_dim();
    if t < n + 1 {
        return Err(Error::Precondition(format!("need at least n+1 = {} samples, got {t}", n + 1)));
    }
    if !(u_range >= 0.0) {
        return Err(Error::InvalidArgument(format!("input range {u_range} must be nonnegative")));
    }
    if zw.dim() != n {
        return dim_err(format!("disturbance set in R^{} for n={n}", zw.dim()));
    }
    let m = sys.input_dim();
    for attempt in 0..EXCITE_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let mut sampler = CzSampler::new(zw)?;
        let u = Mat::from_fn(m, t, |_, _| if u_range > 0.0 { rng.gen_range(-u_range..=u_range) } else { 0.0 });
        let mut w = Mat::zeros(n, t);
        for k in 0..t {
            w.set_column(k, &sampler.sample(&mut rng));
        }
        let data = simulate(sys, x0, &u, &w)?;
        if row_rank_full(&data.x0(), DEFAULT_TOL) {
            return Ok(data);
        }
    }
    Err(Error::Informativity(format!("X0 rank deficient after {EXCITE_RETRIES} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setops::Zonotope;

    fn section_v() -> LinearSystem {
        LinearSystem::new(
            Mat::from_row_slice(2, 2, &[0.8, 0.5, -0.4, 1.2]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap()
    }

    fn box_w(b: f64) -> ConstrainedZonotope {
        Zonotope::symmetric_box(2, b).unwrap().into()
    }

    #[test]
    fn simulate_examples() {
        let zero = LinearSystem::new(Mat::zeros(2, 2), Mat::zeros(2, 1)).unwrap();
        let d = simulate(&zero, &Vector::from_column_slice(&[1.0, 2.0]), &Mat::zeros(1, 4), &Mat::zeros(2, 4)).unwrap();
        assert_eq!(d.x1(), Mat::zeros(2, 4));

        let ident = LinearSystem::new(Mat::identity(2, 2), Mat::zeros(2, 1)).unwrap();
        let x0 = Vector::from_column_slice(&[0.3, -0.7]);
        let d = simulate(&ident, &x0, &Mat::from_element(1, 3, 5.0), &Mat::zeros(2, 3)).unwrap();
        for k in 0..4 {
            assert_eq!(d.x().column(k), x0.column(0));
        }

        let d = simulate(&section_v(), &Vector::from_column_slice(&[1.0, 0.0]), &Mat::zeros(1, 1), &Mat::zeros(2, 1)).unwrap();
        assert!((d.x().column(1) - Vector::from_column_slice(&[0.8, -0.4])).abs().max() < 1e-15);
    }

    #[test]
    fn simulate_detects_divergence() {
        let sys = LinearSystem::new(Mat::from_element(1, 1, 1e200), Mat::zeros(1, 1)).unwrap();
        let r = simulate(&sys, &Vector::from_element(1, 1e200), &Mat::zeros(1, 3), &Mat::zeros(1, 3));
        assert!(matches!(r, Err(Error::Overflow(1))));
    }

    #[test]
    fn dataset_invariants() {
        let sys = section_v();
        let d = excite(&sys, &Vector::from_column_slice(&[0.5, -0.5]), 10, 1.0, &box_w(0.05), 3).unwrap();
        assert_eq!(d.x0().columns(1, 9), d.x1().columns(0, 9));
        assert_eq!(d.d0().rows(0, 2), d.x0().rows(0, 2));
        assert_eq!(d.d0().rows(2, 1), d.u0().rows(0, 1));
        assert!(d.reconstruction_error(&sys) <= 1e-12);
        assert!(row_rank_full(&d.x0(), 1e-9));
        assert!(d.hidden_disturbances().abs().max() <= 0.05);
    }

    #[test]
    fn excite_is_deterministic() {
        let sys = section_v();
        let x0 = Vector::from_column_slice(&[0.5, -0.5]);
        let a = excite(&sys, &x0, 10, 1.0, &box_w(0.03), 17).unwrap();
        let b = excite(&sys, &x0, 10, 1.0, &box_w(0.03), 17).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = excite(&sys, &x0, 10, 1.0, &box_w(0.03), 18).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn excite_preconditions() {
        let sys = section_v();
        let x0 = Vector::zeros(2);
        assert!(matches!(excite(&sys, &x0, 2, 1.0, &box_w(0.1), 0), Err(Error::Precondition(_))));
        let dead = LinearSystem::new(Mat::zeros(2, 2), Mat::from_row_slice(2, 1, &[0.0, 1.0])).unwrap();
        let r = excite(&dead, &Vector::from_column_slice(&[1.0, 1.0]), 5, 0.0, &box_w(0.0), 0);
        assert!(matches!(r, Err(Error::Informativity(_))));
    }

    #[test]
    fn view_exposes_only_public_data() {
        let sys = section_v();
        let d = excite(&sys, &Vector::from_column_slice(&[0.5, -0.5]), 10, 1.0, &box_w(0.05), 1).unwrap();
        let v = d.view();
        let json: serde_json::Value = serde_json::to_value(&v).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(keys, vec!["U0", "X0", "X1"]);
        assert_eq!(v.d0(), d.d0());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let point = ConstrainedZonotope::point(Vector::from_column_slice(&[1.0, -2.0]));
        for _ in 0..10 {
            assert_eq!(sample_czonotope(&point, &mut rng).unwrap(), Vector::from_column_slice(&[1.0, -2.0]));
        }
        let unit = box_w(1.0);
        let mut s = CzSampler::new(&unit).unwrap();
        for _ in 0..10_000 {
            assert!(s.sample(&mut rng).abs().max() <= 1.0);
        }
    }

    #[test]
    fn sample_mean_is_near_center() {
        // symmetric constrained set: the constraint plane passes through the center
        let set = ConstrainedZonotope::new(
            Vector::from_column_slice(&[0.5, -0.25]),
            Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]),
            Mat::from_row_slice(1, 3, &[1.0, -1.0, 0.0]),
            Vector::from_column_slice(&[0.0]),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut s = CzSampler::new(&set).unwrap();
        let mut mean = Vector::zeros(2);
        let n = 100_000;
        for _ in 0..n {
            mean += s.sample(&mut rng);
        }
        mean /= n as f64;
        assert!((mean - set.center()).abs().max() < 0.02, "mean drifted");

        let unit = box_w(1.0);
        let mut s = CzSampler::new(&unit).unwrap();
        let mut mean = Vector::zeros(2);
        for _ in 0..n {
            mean += s.sample(&mut rng);
        }
        assert!((mean / n as f64).abs().max() < 0.02);
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let sys = section_v();
        let d = excite(&sys, &Vector::from_column_slice(&[0.5, -0.5]), 4, 1.0, &box_w(0.05), 1).unwrap();
        d.write_csv(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("X.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t0,t1,t2,t3,t4");
        assert_eq!(lines.len(), 3);
        assert!(dir.path().join("hidden").join("W0.csv").exists());
    }
}
