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

//! Zonotopes, constrained zonotopes, their matrix-valued counterparts and
//! polytopes, with the set algebra used by the closed-loop construction.
//!
//! Factor constraints of matrix sets are stored vectorized: a constraint
//! generator `A_Cᵢ` of shape `n_c × p_c` occupies column `i` of a
//! `(n_c·p_c) × s` matrix as `Vec(A_Cᵢ)`, and `B_C` is stored as `Vec(B_C)`.
//! This keeps heterogeneous constraint blocks stackable without changing the
//! set they describe.
//!
//! Generator order conventions:
//! - interval matrices: one generator per entry, row-major, zero widths skipped;
//! - T-concatenation: generator `(t, i)` sits at index `t·s_w + i`;
//! - zero generators are never dropped implicitly, since constraint columns
//!   stay aligned with generator columns.

mod contain;
mod czono;
mod json;
mod matrix;
mod polytope;

pub use contain::{contains, ContainmentCertificate};
pub use czono::{minkowski_sum, scale_level_set, ConstrainedZonotope, Zonotope};
pub use matrix::{cmz_times_cz, concat_t, intersect_cmz, ConstrainedMatrixZonotope, MatrixZonotope};
pub use polytope::Polytope;

use crate::error::Result;
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{Mat, Vector};

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-7;

/// Solves `cols·ζ = target`, `a·ζ = b`, `‖ζ‖∞ ≤ 1`, each relaxed by `tol`.
///
/// Returns the witness factor vector when feasible.
pub(crate) fn factor_witness(cols: &Mat, target: &Vector, a: &Mat, b: &Vector, tol: f64) -> Result<Option<Vector>> {
    let s = cols.ncols();
    let mut p = LpProblem::new();
    let z = p.add_block("zeta", s, 1, -1.0 - tol, 1.0 + tol);
    let rows = [(cols, target), (a, b)];
    for (m, rhs) in rows {
        if m.nrows() == 0 {
            continue;
        }
        let slack = p.add_block("slack", m.nrows(), 1, -tol, tol);
        for r in 0..m.nrows() {
            let mut e = LinExpr::new();
            for c in 0..s {
                e.add_term(z.at(c, 0), m[(r, c)]);
            }
            e.add_term(slack.at(r, 0), 1.0);
            p.eq(&e, rhs[r]);
        }
    }
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(Some(Vector::from_fn(s, |i, _| sol.value(z.at(i, 0))))),
        LpStatus::Infeasible => Ok(None),
        other => Err(crate::error::Error::Lp(format!("membership program ended with {other:?}"))),
    }
}
