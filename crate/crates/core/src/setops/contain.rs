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

use super::czono::ConstrainedZonotope;
use crate::error::{dim_err, Error, Result};
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{serde_rows, serde_vector, Mat, Vector};

/// Multipliers witnessing `C₁ ⊆ C₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentCertificate {
    #[serde(with = "serde_rows")]
    pub gamma: Mat,
    #[serde(with = "serde_vector")]
    pub l: Vector,
    #[serde(with = "serde_rows")]
    pub p: Mat,
}

/// Searches for `Γ, L, P` with
/// `c₂ − c₁ = G₂L`, `G₁ = G₂Γ`, `PA₁ = A₂Γ`, `Pb₁ = b₂ + A₂L`, `|Γ|1 + |L| ≤ 1`.
///
/// The condition is sufficient only: `None` does not prove non-containment.
pub fn contains(c1: &ConstrainedZonotope, c2: &ConstrainedZonotope) -> Result<Option<ContainmentCertificate>> {
    if c1.dim() != c2.dim() {
        return dim_err(format!("containment between R^{} and R^{}", c1.dim(), c2.dim()));
    }
    let n = c1.dim();
    let (s1, s2) = (c1.num_generators(), c2.num_generators());
    let (q1, q2) = (c1.num_constraints(), c2.num_constraints());

    let mut p = LpProblem::new();
    let gamma = p.add_free_block("gamma", s2, s1);
    let l = p.add_free_block("l", s2, 1);
    let pm = p.add_free_block("p", q2, q1);

    // c2 - c1 = G2 L
    for r in 0..n {
        let mut e = LinExpr::new();
        for k in 0..s2 {
            e.add_term(l.at(k, 0), c2.generators[(r, k)]);
        }
        p.eq(&e, c2.center[r] - c1.center[r]);
    }
    // G1 = G2 Γ
    for r in 0..n {
        for j in 0..s1 {
            let mut e = LinExpr::new();
            for k in 0..s2 {
                e.add_term(gamma.at(k, j), c2.generators[(r, k)]);
            }
            p.eq(&e, c1.generators[(r, j)]);
        }
    }
    // P A1 = A2 Γ
    for r in 0..q2 {
        for j in 0..s1 {
            let mut e = LinExpr::new();
            for k in 0..q1 {
                e.add_term(pm.at(r, k), c1.a[(k, j)]);
            }
            for k in 0..s2 {
                e.add_term(gamma.at(k, j), -c2.a[(r, k)]);
            }
            p.eq(&e, 0.0);
        }
    }
    // P b1 = b2 + A2 L
    for r in 0..q2 {
        let mut e = LinExpr::new();
        for k in 0..q1 {
            e.add_term(pm.at(r, k), c1.b[k]);
        }
        for k in 0..s2 {
            e.add_term(l.at(k, 0), -c2.a[(r, k)]);
        }
        p.eq(&e, c2.b[r]);
    }
    let rows: Vec<Vec<LinExpr>> = (0..s2)
        .map(|k| {
            let mut row: Vec<LinExpr> = (0..s1).map(|j| LinExpr::var(gamma.at(k, j))).collect();
            row.push(LinExpr::var(l.at(k, 0)));
            row
        })
        .collect();
    p.add_abs_bound(&rows, &vec![LinExpr::constant(1.0); s2]);

    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(Some(ContainmentCertificate {
            gamma: sol.block(&gamma),
            l: sol.block(&l).column(0).into_owned(),
            p: sol.block(&pm),
        })),
        LpStatus::Infeasible => Ok(None),
        other => Err(Error::Lp(format!("containment program ended with {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::FactorSampler;
    use crate::setops::{scale_level_set, Zonotope, MEMBERSHIP_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn boxed(scale: f64) -> ConstrainedZonotope {
        Zonotope::new(Vector::zeros(2), Mat::identity(2, 2) * scale).unwrap().into()
    }

    #[test]
    fn scaled_box_inclusion() {
        let cert = contains(&boxed(1.0), &boxed(2.0)).unwrap().expect("certificate");
        assert!((&cert.gamma - Mat::identity(2, 2) * 0.5).abs().max() < 1e-9);
        assert!(cert.l.abs().max() < 1e-9);
    }

    #[test]
    fn self_inclusion() {
        let c = ConstrainedZonotope::new(
            Vector::from_column_slice(&[1.0, 0.0]),
            Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]),
            Mat::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            Vector::from_column_slice(&[0.5]),
        )
        .unwrap();
        let cert = contains(&c, &c).unwrap().expect("a set contains itself");
        // Γ = I, L = 0, P = I is one valid certificate; verify the returned one algebraically
        assert!((&c.generators * &cert.gamma - &c.generators).abs().max() < 1e-7);
        assert!((&cert.p * &c.a - &c.a * &cert.gamma).abs().max() < 1e-7);
    }

    #[test]
    fn larger_box_not_certified_and_falsified() {
        assert!(contains(&boxed(2.0), &boxed(1.0)).unwrap().is_none());
        let big = boxed(2.0);
        let small = boxed(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sampler = FactorSampler::new(&big.a, &big.b).unwrap();
        let found = (0..100).any(|_| {
            let x = big.point_from_factors(&sampler.sample(&mut rng));
            small.contains_point(&x, MEMBERSHIP_TOL).unwrap().is_none()
        });
        assert!(found);
    }

    #[test]
    fn level_sets_are_nested() {
        let z: ConstrainedZonotope =
            Zonotope::new(Vector::from_column_slice(&[0.3, 0.1]), Mat::from_row_slice(2, 3, &[1.0, 0.2, -0.4, 0.1, 0.8, 0.3])).unwrap().into();
        for (l1, l2) in [(0.2, 0.5), (0.5, 0.5), (0.7, 1.0)] {
            let a = scale_level_set(&z, l1).unwrap();
            let b = scale_level_set(&z, l2).unwrap();
            assert!(contains(&a, &b).unwrap().is_some(), "{l1} vs {l2}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let one: ConstrainedZonotope = Zonotope::symmetric_box(1, 1.0).unwrap().into();
        assert!(contains(&one, &boxed(1.0)).is_err());
    }
}
