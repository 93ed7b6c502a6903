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

use serde::{Deserialize, Serialize};

use super::json::PolytopeRepr;
use crate::error::{dim_err, Error, Result};
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{Mat, Vector};

/// `P(H, h) = { x : Hx ≤ h }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeRepr", into = "PolytopeRepr")]
pub struct Polytope {
    pub(crate) h: Mat,
    pub(crate) rhs: Vector,
}

impl Polytope {
    pub fn new(h: Mat, rhs: Vector) -> Result<Self> {
        if h.nrows() != rhs.len() {
            return dim_err(format!("{} halfspace normals for {} offsets", h.nrows(), rhs.len()));
        }
        Ok(Self { h, rhs })
    }

    /// `[I; −I]x ≤ 1`.
    pub fn unit_box(n: usize) -> Self {
        let mut h = Mat::zeros(2 * n, n);
        for i in 0..n {
            h[(i, i)] = 1.0;
            h[(n + i, i)] = -1.0;
        }
        Self { h, rhs: Vector::from_element(2 * n, 1.0) }
    }

    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn num_halfspaces(&self) -> usize {
        self.h.nrows()
    }

    pub fn normals(&self) -> &Mat {
        &self.h
    }

    pub fn offsets(&self) -> &Vector {
        &self.rhs
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (&self.h * x - &self.rhs).iter().all(|&v| v <= tol)
    }

    /// Maximizes `dir·x` over the polytope.
    pub fn support(&self, dir: &Vector) -> Result<Option<f64>> {
        let n = self.dim();
        let mut p = LpProblem::new();
        let x = p.add_free_block("x", n, 1);
        for r in 0..self.num_halfspaces() {
            let mut e = LinExpr::new();
            for j in 0..n {
                e.add_term(x.at(j, 0), self.h[(r, j)]);
            }
            p.le(&e, self.rhs[r]);
        }
        let mut obj = LinExpr::new();
        for j in 0..n {
            obj.add_term(x.at(j, 0), dir[j]);
        }
        p.maximize(obj);
        let sol = p.solve(LP_TOL);
        match sol.status {
            LpStatus::Optimal => Ok(Some(sol.objective)),
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::InvalidArgument("polytope is unbounded".into())),
            LpStatus::NumericalFailure => Err(Error::Lp("support program failed".into())),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.support(&Vector::zeros(self.dim()))?.is_none())
    }

    /// Axis-aligned bounding box from `2n` support evaluations.
    pub fn bounding_box(&self) -> Result<(Vector, Vector)> {
        let n = self.dim();
        let mut lo = Vector::zeros(n);
        let mut hi = Vector::zeros(n);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            hi[i] = self.support(&e)?.ok_or_else(|| Error::EmptySet("polytope".into()))?;
            e[i] = -1.0;
            lo[i] = -self.support(&e)?.ok_or_else(|| Error::EmptySet("polytope".into()))?;
        }
        Ok((lo, hi))
    }

    /// `max_{x ∈ P} ‖x‖∞`.
    pub fn max_inf_norm(&self) -> Result<f64> {
        let (lo, hi) = self.bounding_box()?;
        Ok(lo.iter().chain(hi.iter()).fold(0.0, |m, v| m.max(v.abs())))
    }

    /// Vertex enumeration over all `n`-subsets of tight halfspaces.
    ///
    /// Returns `None` when the number of subsets exceeds `limit`.
    pub fn vertices(&self, limit: usize) -> Option<Vec<Vector>> {
        let n = self.dim();
        let q = self.num_halfspaces();
        if binomial(q, n).map_or(true, |c| c > limit) {
            return None;
        }
        let mut out: Vec<Vector> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        if n == 0 || n > q {
            return Some(out);
        }
        loop {
            let a = Mat::from_fn(n, n, |i, j| self.h[(idx[i], j)]);
            let b = Vector::from_fn(n, |i, _| self.rhs[idx[i]]);
            if let Some(x) = a.lu().solve(&b) {
                let scale = 1.0 + x.abs().max();
                if x.iter().all(|v| v.is_finite())
                    && self.contains(&x, 1e-9 * scale)
                    && !out.iter().any(|y| (y - &x).abs().max() < 1e-9 * scale)
                {
                    out.push(x);
                }
            }
            // next combination
            let mut i = n;
            loop {
                if i == 0 {
                    return Some(out);
                }
                i -= 1;
                if idx[i] < q - n + i {
                    break;
                }
            }
            idx[i] += 1;
            for k in i + 1..n {
                idx[k] = idx[k - 1] + 1;
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let mut acc: usize = 1;
    for i in 0..k.min(n - k) {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_geometry() {
        let p = Polytope::unit_box(2);
        let verts = p.vertices(1000).unwrap();
        assert_eq!(verts.len(), 4);
        assert!(verts.iter().all(|v| v.abs().max() == 1.0));
        assert_eq!(p.max_inf_norm().unwrap(), 1.0);
        assert!(!p.is_empty().unwrap());
        assert!(p.contains(&Vector::from_column_slice(&[0.5, -1.0]), 0.0));
    }

    #[test]
    fn empty_and_unbounded() {
        let p = Polytope::new(Mat::from_row_slice(2, 1, &[1.0, -1.0]), Vector::from_column_slice(&[0.0, -1.0])).unwrap();
        assert!(p.is_empty().unwrap());
        let half = Polytope::new(Mat::from_row_slice(1, 1, &[1.0]), Vector::from_column_slice(&[0.0])).unwrap();
        assert!(half.bounding_box().is_err());
    }

    #[test]
    fn skewed_parallelogram_vertices() {
        let v = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let h = crate::numerics::vstack(&[&v, &(-&v)]).unwrap();
        let p = Polytope::new(h, Vector::from_element(4, 1.0)).unwrap();
        let verts = p.vertices(100).unwrap();
        assert_eq!(verts.len(), 4);
        // vertices are ±V⁻¹(±1, ±1)
        let vinv = v.try_inverse().unwrap();
        for s in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            let x = &vinv * Vector::from_column_slice(&s);
            assert!(verts.iter().any(|y| (y - &x).abs().max() < 1e-9));
        }
        assert_eq!(binomial(4, 2), Some(6));
    }
}
