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

//! Random draws from the factor polytope `{ζ : ‖ζ‖∞ ≤ 1, Aζ = b}`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{null_space, Mat, Vector};

/// Hit-and-run sampler over a factor polytope; unconstrained factor sets
/// are sampled directly from the unit cube.
#[derive(Clone, Debug)]
pub struct FactorSampler {
    dim: usize,
    constrained: bool,
    basis: Mat,
    correction: Mat,
    a: Mat,
    b: Vector,
    state: Vector,
    burned_in: bool,
    boundary_bias: f64,
}

impl FactorSampler {
    pub fn new(a: &Mat, b: &Vector) -> Result<Self> {
        let s = a.ncols();
        if a.nrows() == 0 {
            return Ok(Self {
                dim: s,
                constrained: false,
                basis: Mat::identity(s, s),
                correction: Mat::zeros(s, 0),
                a: a.clone(),
                b: b.clone(),
                state: Vector::zeros(s),
                burned_in: true,
                boundary_bias: 0.0,
            });
        }
        let state = interior_point(a, b)?;
        let basis = null_space(a, 1e-10);
        let correction = a.clone().pseudo_inverse(1e-10).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(Self {
            dim: s,
            constrained: true,
            basis,
            correction,
            a: a.clone(),
            b: b.clone(),
            state,
            burned_in: false,
            boundary_bias: 0.0,
        })
    }

    /// Probability of returning a boundary point (a cube vertex, or the end
    /// of a hit-and-run chord) instead of an interior draw.
    pub fn with_boundary_bias(mut self, p: f64) -> Self {
        self.boundary_bias = p.clamp(0.0, 1.0);
        self
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vector {
        if !self.constrained {
            let vertex = self.boundary_bias > 0.0 && rng.gen_bool(self.boundary_bias);
            return Vector::from_fn(self.dim, |_, _| {
                if vertex {
                    if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    rng.gen_range(-1.0..=1.0)
                }
            });
        }
        let k = self.basis.ncols();
        if k == 0 {
            return self.state.clone();
        }
        if !self.burned_in {
            for _ in 0..(20 * k).max(50) {
                self.step(rng, false);
            }
            self.burned_in = true;
        }
        for _ in 0..k.clamp(3, 25) {
            self.step(rng, false);
        }
        if self.boundary_bias > 0.0 && rng.gen_bool(self.boundary_bias) {
            // report a chord end without moving the chain there
            let saved = self.state.clone();
            self.step(rng, true);
            let out = self.state.clone();
            self.state = saved;
            return out;
        }
        self.state.clone()
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, to_end: bool) {
        let k = self.basis.ncols();
        let r = Vector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = &self.basis * r;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.dim {
            if d[i].abs() < 1e-14 {
                continue;
            }
            let t1 = (-1.0 - self.state[i]) / d[i];
            let t2 = (1.0 - self.state[i]) / d[i];
            lo = lo.max(t1.min(t2));
            hi = hi.min(t1.max(t2));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return;
        }
        let t = if to_end {
            if rng.gen_bool(0.5) {
                lo
            } else {
                hi
            }
        } else {
            rng.gen_range(lo..hi)
        };
        let mut next = &self.state + d * t;
        let drift = &self.a * &next - &self.b;
        next -= &self.correction * drift;
        for v in next.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        self.state = next;
    }
}

/// A point deep inside the factor polytope: maximizes the margin to the cube faces.
fn interior_point(a: &Mat, b: &Vector) -> Result<Vector> {
    let s = a.ncols();
    let mut p = LpProblem::new();
    let z = p.add_free_block("zeta", s, 1);
    let t = p.add_var("margin", 0.0, 1.0);
    for r in 0..a.nrows() {
        let mut e = LinExpr::new();
        for c in 0..s {
            e.add_term(z.at(c, 0), a[(r, c)]);
        }
        p.eq(&e, b[r]);
    }
    for c in 0..s {
        let mut up = LinExpr::var(z.at(c, 0));
        up.add_term(t, 1.0);
        p.le(&up, 1.0);
        let mut down = LinExpr::var(z.at(c, 0));
        down.add_term(t, -1.0);
        p.ge(&down, -1.0);
    }
    p.maximize(LinExpr::var(t));
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(sol.block(&z).column(0).into_owned()),
        LpStatus::Infeasible => Err(Error::EmptySet("factor polytope has no feasible point".into())),
        other => Err(Error::Lp(format!("interior point program ended with {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constrained_samples_stay_feasible() {
        let a = Mat::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let b = Vector::from_column_slice(&[0.5]);
        let mut s = FactorSampler::new(&a, &b).unwrap().with_boundary_bias(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let z = s.sample(&mut rng);
            assert!(z.abs().max() <= 1.0);
            assert!(((&a * &z)[0] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_factor_set() {
        let a = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = Vector::from_column_slice(&[3.0]);
        assert!(matches!(FactorSampler::new(&a, &b), Err(Error::EmptySet(_))));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = Mat::from_row_slice(1, 4, &[1.0, -1.0, 0.5, 0.0]);
        let b = Vector::from_column_slice(&[0.1]);
        let draw = |seed| {
            let mut s = FactorSampler::new(&a, &b).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}
