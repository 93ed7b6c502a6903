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

//! Sets of disturbances, closed-loop matrices and successor states that are
//! consistent with the recorded data and the prior knowledge.
//!
//! With `W` the stacked disturbance realization, every admissible model
//! satisfies `X1 = θ·D0 + W`. The disturbance sequences compatible with both
//! the prior `M_prior` and the disturbance bound are
//! `M_dp = concat_T(Zw) ∩ (X1 − M_prior·D0)`, and for a gain parametrized as
//! `K = U0·G_K` with `X0·G_K = I` the closed-loop matrix is `(X1 − W)·G_K`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::DataView;
use crate::error::{dim_err, Error, Result};
use crate::lp::{LinExpr, LpProblem, LpStatus, LP_TOL};
use crate::numerics::{Mat, Vector};
use crate::setops::{
    cmz_times_cz, concat_t, factor_witness, intersect_cmz, minkowski_sum, ConstrainedMatrixZonotope,
    ConstrainedZonotope, MEMBERSHIP_TOL,
};

/// Tolerance on `‖X0·G_K − I‖∞`.
pub const PARAMETRIZATION_TOL: f64 = 1e-6;

/// Prior model set and disturbance bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorKnowledge {
    /// Set containing `[A B]`; `None` means no model knowledge.
    model: Option<ConstrainedMatrixZonotope>,
    disturbance: ConstrainedZonotope,
}

impl PriorKnowledge {
    pub fn new(model: ConstrainedMatrixZonotope, disturbance: ConstrainedZonotope) -> Result<Self> {
        let (n, cols) = model.shape();
        if n != disturbance.dim() || cols < n {
            return dim_err(format!("prior of shape {:?} with disturbances in R^{}", model.shape(), disturbance.dim()));
        }
        Ok(Self { model: Some(model), disturbance })
    }

    pub fn without_model(disturbance: ConstrainedZonotope) -> Self {
        Self { model: None, disturbance }
    }

    pub fn model(&self) -> Option<&ConstrainedMatrixZonotope> {
        self.model.as_ref()
    }

    pub fn disturbance(&self) -> &ConstrainedZonotope {
        &self.disturbance
    }

    /// The same knowledge with the model set dropped.
    pub fn drop_model(&self) -> Self {
        Self::without_model(self.disturbance.clone())
    }

    fn check(&self, data: &DataView) -> Result<()> {
        let n = data.state_dim();
        if self.disturbance.dim() != n {
            return dim_err(format!("disturbances in R^{} for n={n}", self.disturbance.dim()));
        }
        if let Some(m) = &self.model {
            if m.shape() != (n, n + data.input_dim()) {
                return dim_err(format!("prior of shape {:?} for n={n}, m={}", m.shape(), data.input_dim()));
            }
        }
        Ok(())
    }
}

/// Hashes identifying the inputs a closed-loop set was built from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset: String,
    pub prior: String,
    pub gain: String,
    /// The disturbance-set refinement step is not applied; `M_dp` is the raw
    /// intersection.
    pub refinement_skipped: bool,
    /// The factor set of `M_dp` admits no point, i.e. the data contradict
    /// the prior.
    pub empty: bool,
}

/// Closed-loop matrix set with the identifiers of its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopSet {
    pub provenance: Provenance,
    pub set: ConstrainedMatrixZonotope,
}

impl ClosedLoopSet {
    pub fn set(&self) -> &ConstrainedMatrixZonotope {
        &self.set
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.empty
    }
}

/// SHA-256 of the JSON serialization.
pub fn content_hash<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    format!("{:x}", Sha256::digest(bytes))
}

/// `{X1 − θ·D0 : θ ∈ M_prior}`: generators `−G_θᵢ·D0`, center
/// `X1 − C_θ·D0`, constraints of the prior.
pub fn data_disturbances(data: &DataView, model: &ConstrainedMatrixZonotope) -> Result<ConstrainedMatrixZonotope> {
    model.right_mul(&data.d0())?.neg().translate(data.x1())
}

/// `M_dp`: disturbance sequences compatible with data, prior and bound.
///
/// Factors are ordered disturbance block first (`T·s_w`), then the prior
/// block. Without a model set this is `concat_T(Zw)`.
pub fn consistent_disturbances(data: &DataView, prior: &PriorKnowledge) -> Result<ConstrainedMatrixZonotope> {
    prior.check(data)?;
    let zw_t = concat_t(&prior.disturbance, data.samples())?;
    match &prior.model {
        Some(m) => intersect_cmz(&zw_t, &data_disturbances(data, m)?),
        None => Ok(zw_t),
    }
}

/// `(X1 − M_dp)·G_K` without checking `X0·G_K = I`.
///
/// Center `(X1 − C_w)·G_K`, generators `−Gᵢ·G_K` (zero on the prior block),
/// constraints of `M_dp`.
pub fn closed_loop_matrices(x1: &Mat, mdp: &ConstrainedMatrixZonotope, gk: &Mat) -> Result<ConstrainedMatrixZonotope> {
    mdp.neg().translate(x1)?.right_mul(gk)
}

/// `‖X0·G_K − I‖∞` (max entry).
pub fn parametrization_error(data: &DataView, gk: &Mat) -> Result<f64> {
    if gk.shape() != (data.samples(), data.state_dim()) {
        return dim_err(format!("G_K of shape {:?} for T={}, n={}", gk.shape(), data.samples(), data.state_dim()));
    }
    let n = data.state_dim();
    Ok((data.x0() * gk - Mat::identity(n, n)).abs().max())
}

/// Set of `A + B·U0·G_K` over all models consistent with data and prior.
pub fn closed_loop_set(data: &DataView, prior: &PriorKnowledge, gk: &Mat) -> Result<ClosedLoopSet> {
    let err = parametrization_error(data, gk)?;
    if err > PARAMETRIZATION_TOL {
        return Err(Error::Precondition(format!("X0·G_K deviates from the identity by {err:e}")));
    }
    let mdp = consistent_disturbances(data, prior)?;
    let set = closed_loop_matrices(data.x1(), &mdp, gk)?;
    let empty = factor_set_empty(mdp.constraint_matrix(), mdp.constraint_vector())?;
    Ok(ClosedLoopSet {
        provenance: Provenance {
            dataset: content_hash(data),
            prior: content_hash(prior),
            gain: content_hash(&crate::numerics::to_rows(gk)),
            refinement_skipped: true,
            empty,
        },
        set,
    })
}

/// `{A·x : A ∈ m, x ∈ cx} ⊕ zw`.
pub fn successor_set(
    m: &ConstrainedMatrixZonotope,
    cx: &ConstrainedZonotope,
    zw: &ConstrainedZonotope,
) -> Result<ConstrainedZonotope> {
    minkowski_sum(&cmz_times_cz(m, cx)?, zw)
}

/// Over-approximation of the next states from `cx` under the closed loop.
pub fn next_state_set(cl: &ClosedLoopSet, cx: &ConstrainedZonotope, zw: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    successor_set(&cl.set, cx, zw)
}

/// `θ ∈ M_prior` and `X1 − θ·D0 ∈ concat_T(Zw)`.
pub fn theta_consistent(theta: &Mat, data: &DataView, prior: &PriorKnowledge) -> Result<bool> {
    prior.check(data)?;
    let n = data.state_dim();
    if theta.shape() != (n, n + data.input_dim()) {
        return dim_err(format!("θ of shape {:?}", theta.shape()));
    }
    if let Some(m) = &prior.model {
        if m.contains_matrix(theta, MEMBERSHIP_TOL)?.is_none() {
            return Ok(false);
        }
    }
    let w = data.x1() - theta * data.d0();
    Ok(concat_t(&prior.disturbance, data.samples())?.contains_matrix(&w, MEMBERSHIP_TOL)?.is_some())
}

/// Smallest `b` such that some `θ` explains the data with all disturbances
/// in `[-b, b]ⁿ`. `θ` ranges over `model`, or over all matrices when `model`
/// is `None`. Returns `None` when the model set is empty.
pub fn min_consistent_box_level(data: &DataView, model: Option<&ConstrainedMatrixZonotope>) -> Result<Option<f64>> {
    let n = data.state_dim();
    let t = data.samples();
    let cols = n + data.input_dim();
    let mut p = LpProblem::new();
    let level = p.add_var("b", 0.0, f64::INFINITY);
    // θ·D0 as affine expressions in the decision variables
    let d0 = data.d0();
    let mut theta_d0 = vec![vec![LinExpr::new(); t]; n];
    match model {
        Some(m) => {
            if m.shape() != (n, cols) {
                return dim_err(format!("prior of shape {:?} for n={n}, m={}", m.shape(), data.input_dim()));
            }
            let s = m.num_generators();
            let z = p.add_block("zeta", s, 1, -1.0, 1.0);
            for r in 0..m.num_constraints() {
                let mut e = LinExpr::new();
                for i in 0..s {
                    e.add_term(z.at(i, 0), m.constraint_matrix()[(r, i)]);
                }
                p.eq(&e, m.constraint_vector()[r]);
            }
            let c_d0 = m.center() * &d0;
            let g_d0: Vec<Mat> = m.generators().iter().map(|g| g * &d0).collect();
            for r in 0..n {
                for k in 0..t {
                    let e = &mut theta_d0[r][k];
                    e.add_constant(c_d0[(r, k)]);
                    for (i, g) in g_d0.iter().enumerate() {
                        e.add_term(z.at(i, 0), g[(r, k)]);
                    }
                }
            }
        }
        None => {
            let theta = p.add_free_block("theta", n, cols);
            for r in 0..n {
                for k in 0..t {
                    for c in 0..cols {
                        theta_d0[r][k].add_term(theta.at(r, c), d0[(c, k)]);
                    }
                }
            }
        }
    }
    for r in 0..n {
        for k in 0..t {
            let mut e = LinExpr::constant(data.x1()[(r, k)]);
            e.add_expr(&theta_d0[r][k], -1.0);
            let mut upper = e.clone();
            upper.add_term(level, -1.0);
            p.le(&upper, 0.0);
            let mut lower = e;
            lower.add_term(level, 1.0);
            p.ge(&lower, 0.0);
        }
    }
    p.minimize(LinExpr::var(level));
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol.value(level))),
        LpStatus::Infeasible => Ok(None),
        other => Err(Error::Lp(format!("consistency program ended with {other:?}"))),
    }
}

/// Whether `{ζ : Aζ = b, ‖ζ‖∞ ≤ 1}` is empty.
pub fn factor_set_empty(a: &Mat, b: &Vector) -> Result<bool> {
    if a.nrows() == 0 {
        return Ok(false);
    }
    Ok(factor_witness(&Mat::zeros(0, a.ncols()), &Vector::zeros(0), a, b, MEMBERSHIP_TOL)?.is_none())
}
