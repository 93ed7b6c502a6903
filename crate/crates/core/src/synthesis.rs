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

//! Safe state-feedback synthesis.
//!
//! Both methods search for `G_K` with `X0·G_K = I` and return `K = U0·G_K`.
//! [`synthesize_czono`] encodes the inclusion of the successor set of a
//! constrained-zonotope safe set in its `λ`-scaled copy as one joint LP;
//! [`synthesize_polytope`] uses the dual LP for a polytopic safe set with
//! precomputed bounds `y`, `l` on the disturbance and uncertainty terms.
//! Both conditions are sufficient only: an infeasible program means that no
//! certificate was found.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::closedloop::{
    closed_loop_matrices, closed_loop_set, consistent_disturbances, factor_set_empty, min_consistent_box_level,
    next_state_set, successor_set, PriorKnowledge,
};
use crate::datagen::DataView;
use crate::error::{dim_err, Error, Result};
use crate::lp::{LinExpr, LpProblem, LpSolution, LpStatus, LP_TOL};
use crate::numerics::{inf_norm, serde_rows_opt, serde_vector, Mat, Vector};
use crate::setops::{contains, scale_level_set, ConstrainedMatrixZonotope, ConstrainedZonotope, Polytope, Zonotope};

/// Default bisection tolerance for `λ` and `b`.
pub const BISECTION_TOL: f64 = 1e-3;

/// Safe set, as a polytope `{x : Hx ≤ h}` or as a constrained zonotope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "set", rename_all = "snake_case")]
pub enum SafeSet {
    Polytope(Polytope),
    Czonotope(ConstrainedZonotope),
}

impl SafeSet {
    pub fn dim(&self) -> usize {
        match self {
            SafeSet::Polytope(p) => p.dim(),
            SafeSet::Czonotope(c) => c.dim(),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        match self {
            SafeSet::Polytope(p) => Ok(p.contains(x, tol)),
            SafeSet::Czonotope(c) => Ok(c.contains_point(x, tol)?.is_some()),
        }
    }
}

/// How the uncertainty term `l` of the polytopic program is bounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `coef_ij = |h_j|·‖G_wi‖∞` with `0 ≤ β ≤ 1` over the factor constraints.
    Paper,
    /// `coef_ij = ‖H_j·G_wi‖₁·max_{x∈P}‖x‖∞` with exact factor magnitude bounds.
    #[default]
    Sound,
}

/// Everything a synthesis call needs. Holds no true model.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisSpec {
    pub data: DataView,
    pub prior: PriorKnowledge,
    pub safe_set: SafeSet,
    pub lambda: f64,
    pub use_prior: bool,
    pub bound_mode: BoundMode,
}

impl SynthesisSpec {
    pub fn new(data: DataView, prior: PriorKnowledge, safe_set: SafeSet, lambda: f64) -> Result<Self> {
        let n = data.state_dim();
        if safe_set.dim() != n || prior.disturbance().dim() != n {
            return dim_err(format!(
                "safe set in R^{} and disturbances in R^{} for n={n}",
                safe_set.dim(),
                prior.disturbance().dim()
            ));
        }
        check_lambda(lambda)?;
        Ok(Self { data, prior, safe_set, lambda, use_prior: true, bound_mode: BoundMode::default() })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_bound_mode(mut self, mode: BoundMode) -> Self {
        self.bound_mode = mode;
        self
    }

    pub fn with_prior(mut self, use_prior: bool) -> Self {
        self.use_prior = use_prior;
        self
    }

    /// Replaces the disturbance set by `[-b, b]ⁿ`.
    pub fn with_box_disturbance(mut self, b: f64) -> Result<Self> {
        let zw: ConstrainedZonotope = Zonotope::symmetric_box(self.data.state_dim(), b)?.into();
        self.prior = match self.prior.model() {
            Some(m) => PriorKnowledge::new(m.clone(), zw)?,
            None => PriorKnowledge::without_model(zw),
        };
        Ok(self)
    }

    /// The knowledge actually used: the model set is dropped when
    /// `use_prior` is off.
    pub fn effective_prior(&self) -> PriorKnowledge {
        if self.use_prior {
            self.prior.clone()
        } else {
            self.prior.drop_model()
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("contraction factor {lambda} outside (0, 1)")));
    }
    Ok(())
}

/// Same specification without model knowledge: `M_dp = concat_T(Zw)`.
pub fn prior_free_variant(spec: &SynthesisSpec) -> SynthesisSpec {
    let mut out = spec.clone();
    out.prior = spec.prior.drop_model();
    out.use_prior = false;
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisStatus {
    Feasible,
    Infeasible,
    Failure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Czonotope,
    Polytope,
}

/// Multipliers returned with a feasible result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Containment {
        #[serde(with = "crate::numerics::serde_rows")]
        gamma: Mat,
        #[serde(with = "serde_vector")]
        l: Vector,
        #[serde(with = "crate::numerics::serde_rows")]
        p: Mat,
    },
    Dual {
        #[serde(with = "crate::numerics::serde_rows")]
        p: Mat,
        rho: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lp_variables: usize,
    pub lp_constraints: usize,
    pub lp_residual: f64,
    pub closed_loop_generators: usize,
    pub solve_ms: f64,
    /// The `β ≥ 0` bound program was infeasible and the factor magnitude
    /// bound was used instead.
    pub bound_fallback: bool,
    /// Outcome of the independent containment re-check, when run.
    pub recheck: Option<bool>,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub method: Method,
    pub status: SynthesisStatus,
    pub lambda: f64,
    pub use_prior: bool,
    pub bound_mode: BoundMode,
    #[serde(with = "serde_rows_opt")]
    pub k: Option<Mat>,
    #[serde(with = "serde_rows_opt")]
    pub gk: Option<Mat>,
    pub certificate: Option<Certificate>,
    pub diagnostics: Diagnostics,
}

impl SynthesisResult {
    pub fn is_feasible(&self) -> bool {
        self.status == SynthesisStatus::Feasible
    }

    fn unsolved(spec: &SynthesisSpec, method: Method, status: SynthesisStatus, diagnostics: Diagnostics) -> Self {
        Self {
            method,
            status,
            lambda: spec.lambda,
            use_prior: spec.use_prior,
            bound_mode: spec.bound_mode,
            k: None,
            gk: None,
            certificate: None,
            diagnostics,
        }
    }
}

/// Dispatches on the safe-set representation.
pub fn synthesize(spec: &SynthesisSpec) -> Result<SynthesisResult> {
    match &spec.safe_set {
        SafeSet::Polytope(_) => synthesize_polytope(spec),
        SafeSet::Czonotope(_) => synthesize_czono(spec),
    }
}

fn lp_status(sol: &LpSolution) -> SynthesisStatus {
    match sol.status {
        LpStatus::Optimal => SynthesisStatus::Feasible,
        LpStatus::Infeasible => SynthesisStatus::Infeasible,
        LpStatus::Unbounded | LpStatus::NumericalFailure => SynthesisStatus::Failure,
    }
}

/// `X0·G_K = I` as equality rows.
fn add_parametrization(p: &mut LpProblem, x0: &Mat, gk: &crate::lp::Block) {
    let n = x0.nrows();
    for r in 0..n {
        for c in 0..n {
            let mut e = LinExpr::new();
            for t in 0..x0.ncols() {
                e.add_term(gk.at(t, c), x0[(r, t)]);
            }
            p.eq(&e, if r == c { 1.0 } else { 0.0 });
        }
    }
}

/// Successor set as an affine function of `G_K`: the set at `G_K = 0` and
/// the generator/center increments for each unit entry `(t, c)`.
struct AffineSuccessor {
    base: ConstrainedZonotope,
    dg: Vec<Mat>,
    dc: Vec<Vector>,
    cols: usize,
}

impl AffineSuccessor {
    fn new(x1: &Mat, mdp: &ConstrainedMatrixZonotope, cx: &ConstrainedZonotope, zw: &ConstrainedZonotope) -> Result<Self> {
        let (t, n) = (x1.ncols(), x1.nrows());
        let base = successor_set(&closed_loop_matrices(x1, mdp, &Mat::zeros(t, n))?, cx, zw)?;
        let mut dg = Vec::with_capacity(t * n);
        let mut dc = Vec::with_capacity(t * n);
        for r in 0..t {
            for c in 0..n {
                let mut e = Mat::zeros(t, n);
                e[(r, c)] = 1.0;
                let s = successor_set(&closed_loop_matrices(x1, mdp, &e)?, cx, zw)?;
                dg.push(s.generators() - base.generators());
                dc.push(s.center() - base.center());
            }
        }
        Ok(Self { base, dg, dc, cols: n })
    }

    fn index(&self, t: usize, c: usize) -> usize {
        t * self.cols + c
    }
}

/// Joint program in `(G_K, Γ, L, P)` for a constrained-zonotope safe set.
pub fn synthesize_czono(spec: &SynthesisSpec) -> Result<SynthesisResult> {
    let SafeSet::Czonotope(cx) = &spec.safe_set else {
        return Err(Error::InvalidArgument("constrained-zonotope synthesis needs a constrained-zonotope safe set".into()));
    };
    let start = Instant::now();
    let prior = spec.effective_prior();
    let zw = prior.disturbance();
    let data = &spec.data;
    let mdp = consistent_disturbances(data, &prior)?;
    let mut diag = Diagnostics { closed_loop_generators: mdp.num_generators(), ..Default::default() };
    if factor_set_empty(mdp.constraint_matrix(), mdp.constraint_vector())? {
        diag.message = Some("data contradict the prior knowledge".into());
        return Ok(SynthesisResult::unsolved(spec, Method::Czonotope, SynthesisStatus::Failure, diag));
    }
    let aff = AffineSuccessor::new(data.x1(), &mdp, cx, zw)?;
    let target = scale_level_set(cx, spec.lambda)?;
    let (n, t) = (data.state_dim(), data.samples());
    let s1 = aff.base.num_generators();
    let q1 = aff.base.num_constraints();
    let (s2, q2) = (target.num_generators(), target.num_constraints());
    let (g2, c2, a2, b2) = (target.generators(), target.center(), target.constraint_matrix(), target.constraint_vector());
    let (a1, b1) = (aff.base.constraint_matrix(), aff.base.constraint_vector());

    let mut p = LpProblem::new();
    let gk = p.add_free_block("gk", t, n);
    let gamma = p.add_free_block("gamma", s2, s1);
    let l = p.add_free_block("l", s2, 1);
    let pm = p.add_free_block("p", q2, q1);

    let affine_entry = |base: f64, pick: &dyn Fn(usize) -> f64| {
        let mut e = LinExpr::constant(base);
        for tt in 0..t {
            for c in 0..n {
                let coef = pick(aff.index(tt, c));
                if coef != 0.0 {
                    e.add_term(gk.at(tt, c), coef);
                }
            }
        }
        e
    };
    // c2 − c1(G_K) = G2 L
    for r in 0..n {
        let c1 = affine_entry(aff.base.center()[r], &|k| aff.dc[k][r]);
        let mut e = LinExpr::new();
        for k in 0..s2 {
            e.add_term(l.at(k, 0), g2[(r, k)]);
        }
        e.add_expr(&c1, 1.0);
        p.eq(&e, c2[r]);
    }
    // G1(G_K) = G2 Γ
    for r in 0..n {
        for j in 0..s1 {
            let mut e = affine_entry(aff.base.generators()[(r, j)], &|k| aff.dg[k][(r, j)]);
            for k in 0..s2 {
                e.add_term(gamma.at(k, j), -g2[(r, k)]);
            }
            p.eq(&e, 0.0);
        }
    }
    // P A1 = A2 Γ
    for r in 0..q2 {
        for j in 0..s1 {
            let mut e = LinExpr::new();
            for k in 0..q1 {
                e.add_term(pm.at(r, k), a1[(k, j)]);
            }
            for k in 0..s2 {
                e.add_term(gamma.at(k, j), -a2[(r, k)]);
            }
            p.eq(&e, 0.0);
        }
    }
    // P b1 = b2 + A2 L
    for r in 0..q2 {
        let mut e = LinExpr::new();
        for k in 0..q1 {
            e.add_term(pm.at(r, k), b1[k]);
        }
        for k in 0..s2 {
            e.add_term(l.at(k, 0), -a2[(r, k)]);
        }
        p.eq(&e, b2[r]);
    }
    let rows: Vec<Vec<LinExpr>> = (0..s2)
        .map(|k| {
            let mut row: Vec<LinExpr> = (0..s1).map(|j| LinExpr::var(gamma.at(k, j))).collect();
            row.push(LinExpr::var(l.at(k, 0)));
            row
        })
        .collect();
    p.add_abs_bound(&rows, &vec![LinExpr::constant(1.0); s2]);
    add_parametrization(&mut p, data.x0(), &gk);

    let sol = p.solve(LP_TOL);
    diag.lp_variables = p.num_vars();
    diag.lp_constraints = p.num_constraints();
    diag.lp_residual = sol.residual;
    let status = lp_status(&sol);
    if status != SynthesisStatus::Feasible {
        diag.solve_ms = start.elapsed().as_secs_f64() * 1e3;
        return Ok(SynthesisResult::unsolved(spec, Method::Czonotope, status, diag));
    }
    let gk_val = sol.block(&gk);
    let cl = closed_loop_set(data, &prior, &gk_val)?;
    let recheck = contains(&next_state_set(&cl, cx, zw)?, &target)?.is_some();
    diag.recheck = Some(recheck);
    diag.solve_ms = start.elapsed().as_secs_f64() * 1e3;
    if !recheck {
        diag.message = Some("containment re-check of the returned gain failed".into());
        return Ok(SynthesisResult::unsolved(spec, Method::Czonotope, SynthesisStatus::Failure, diag));
    }
    Ok(SynthesisResult {
        method: Method::Czonotope,
        status,
        lambda: spec.lambda,
        use_prior: spec.use_prior,
        bound_mode: spec.bound_mode,
        k: Some(data.u0() * &gk_val),
        gk: Some(gk_val),
        certificate: Some(Certificate::Containment { gamma: sol.block(&gamma), l: sol.block(&l).column(0).into_owned(), p: sol.block(&pm) }),
        diagnostics: diag,
    })
}

/// Bounds entering the polytopic program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBounds {
    /// `y_j = Σᵢ |H_j·G_hi|`.
    #[serde(with = "serde_vector")]
    pub y: Vector,
    /// Bound on the model-uncertainty term per unit of `‖G_K‖∞`.
    #[serde(with = "serde_vector")]
    pub l: Vector,
    pub fallback: bool,
}

/// `max Σ coefᵢβᵢ` subject to `Aβ = b`, `0 ≤ β ≤ 1`; `None` when infeasible.
pub fn max_weighted_factor(coef: &Vector, a: &Mat, b: &Vector) -> Result<Option<f64>> {
    let s = coef.len();
    if a.ncols() != s || a.nrows() != b.len() {
        return dim_err(format!("weights of length {s} with constraints {:?}", a.shape()));
    }
    if a.nrows() == 0 {
        return Ok(Some(coef.iter().map(|c| c.max(0.0)).sum()));
    }
    let mut p = LpProblem::new();
    let beta = p.add_block("beta", s, 1, 0.0, 1.0);
    for r in 0..a.nrows() {
        let mut e = LinExpr::new();
        for i in 0..s {
            e.add_term(beta.at(i, 0), a[(r, i)]);
        }
        p.eq(&e, b[r]);
    }
    let mut obj = LinExpr::new();
    for i in 0..s {
        obj.add_term(beta.at(i, 0), coef[i]);
    }
    p.maximize(obj);
    let sol = p.solve(LP_TOL);
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol.objective)),
        LpStatus::Infeasible => Ok(None),
        other => Err(Error::Lp(format!("bound program ended with {other:?}"))),
    }
}

/// `mᵢ = max |ζᵢ|` over `{ζ : Aζ = b, ‖ζ‖∞ ≤ 1}` for the first `count`
/// factors.
pub fn factor_magnitudes(a: &Mat, b: &Vector, count: usize) -> Result<Vector> {
    let s = a.ncols();
    if a.nrows() == 0 {
        return Ok(Vector::from_element(count, 1.0));
    }
    let mut p = LpProblem::new();
    let z = p.add_block("zeta", s, 1, -1.0, 1.0);
    for r in 0..a.nrows() {
        let mut e = LinExpr::new();
        for i in 0..s {
            e.add_term(z.at(i, 0), a[(r, i)]);
        }
        p.eq(&e, b[r]);
    }
    let mut m = Vector::zeros(count);
    for i in 0..count {
        let mut hi = 0.0f64;
        for sign in [1.0, -1.0] {
            let mut q = p.clone();
            let mut obj = LinExpr::new();
            obj.add_term(z.at(i, 0), sign);
            q.maximize(obj);
            let sol = q.solve(LP_TOL);
            match sol.status {
                LpStatus::Optimal => hi = hi.max(sol.objective),
                LpStatus::Infeasible => return Err(Error::EmptySet("factor set of the consistent disturbances".into())),
                other => return Err(Error::Lp(format!("factor bound program ended with {other:?}"))),
            }
        }
        m[i] = hi.clamp(0.0, 1.0);
    }
    Ok(m)
}

/// Computes `y` and `l` for the polytopic program.
///
/// `mdp` must list the `T·s_w` disturbance generators first.
pub fn compute_y_l(safe: &Polytope, zw: &ConstrainedZonotope, mdp: &ConstrainedMatrixZonotope, mode: BoundMode) -> Result<UncertaintyBounds> {
    let (h, rhs) = (safe.normals(), safe.offsets());
    let q = safe.num_halfspaces();
    let hg = h * zw.generators();
    let y = Vector::from_fn(q, |j, _| hg.row(j).iter().map(|v| v.abs()).sum());
    let t = mdp.shape().1;
    let sw = t * zw.num_generators();
    let gens = &mdp.generators()[..sw];
    let (a, b) = (mdp.constraint_matrix(), mdp.constraint_vector());
    let mut l = Vector::zeros(q);
    let mut fallback = false;
    match mode {
        BoundMode::Sound => {
            let radius = safe.max_inf_norm()?;
            let m = factor_magnitudes(a, b, sw)?;
            for j in 0..q {
                let hj = h.row(j);
                l[j] = gens.iter().zip(m.iter()).map(|(g, mi)| (hj * g).abs().sum() * radius * mi).sum();
            }
        }
        BoundMode::Paper => {
            // factors [ζ_dp; ζ_h], constraints diag(A_dp, A_h)
            let s = mdp.num_generators() + zw.num_generators();
            let abar = crate::numerics::block_diag(&[a, zw.constraint_matrix()]);
            let bbar = crate::numerics::vconcat(&[b, zw.constraint_vector()]);
            let norms: Vec<f64> = gens.iter().map(|g| inf_norm(g).unwrap_or(0.0)).collect();
            let mut magnitudes: Option<Vector> = None;
            for j in 0..q {
                let coef = Vector::from_fn(s, |i, _| if i < sw { rhs[j].abs() * norms[i] } else { 0.0 });
                l[j] = match max_weighted_factor(&coef, &abar, &bbar)? {
                    Some(v) => v,
                    None => {
                        fallback = true;
                        let m = match &magnitudes {
                            Some(m) => m.clone(),
                            None => {
                                let m = factor_magnitudes(a, b, sw)?;
                                magnitudes = Some(m.clone());
                                m
                            }
                        };
                        (0..sw).map(|i| coef[i] * m[i]).sum()
                    }
                };
            }
        }
    }
    Ok(UncertaintyBounds { y, l, fallback })
}

/// Dual program in `(P, G_K, ρ)` for a polytopic safe set, minimizing `ρ`.
pub fn synthesize_polytope(spec: &SynthesisSpec) -> Result<SynthesisResult> {
    let SafeSet::Polytope(safe) = &spec.safe_set else {
        return Err(Error::InvalidArgument("polytopic synthesis needs a polytopic safe set".into()));
    };
    let start = Instant::now();
    let prior = spec.effective_prior();
    let zw = prior.disturbance();
    let data = &spec.data;
    let mdp = consistent_disturbances(data, &prior)?;
    let mut diag = Diagnostics { closed_loop_generators: mdp.num_generators(), ..Default::default() };
    let bounds = match compute_y_l(safe, zw, &mdp, spec.bound_mode) {
        Ok(b) => b,
        Err(Error::EmptySet(_)) => {
            diag.message = Some("data contradict the prior knowledge".into());
            return Ok(SynthesisResult::unsolved(spec, Method::Polytope, SynthesisStatus::Failure, diag));
        }
        Err(e) => return Err(e),
    };
    diag.bound_fallback = bounds.fallback;
    let (h, rhs) = (safe.normals(), safe.offsets());
    let q = safe.num_halfspaces();
    let (n, t) = (data.state_dim(), data.samples());
    let hc = h * zw.center();
    let hx = h * (data.x1() - mdp.center());

    let mut p = LpProblem::new();
    let pm = p.add_block("p", q, q, 0.0, f64::INFINITY);
    let gk = p.add_free_block("gk", t, n);
    let rho = p.add_var("rho", 0.0, f64::INFINITY);
    // P h + ρ l ≤ λh − H c_h − y
    for j in 0..q {
        let mut e = LinExpr::new();
        for k in 0..q {
            e.add_term(pm.at(j, k), rhs[k]);
        }
        e.add_term(rho, bounds.l[j]);
        p.le(&e, spec.lambda * rhs[j] - hc[j] - bounds.y[j]);
    }
    // P H = H (X1 − C_w) G_K
    for j in 0..q {
        for c in 0..n {
            let mut e = LinExpr::new();
            for k in 0..q {
                e.add_term(pm.at(j, k), h[(k, c)]);
            }
            for tt in 0..t {
                e.add_term(gk.at(tt, c), -hx[(j, tt)]);
            }
            p.eq(&e, 0.0);
        }
    }
    let rows: Vec<Vec<LinExpr>> = (0..t).map(|tt| (0..n).map(|c| LinExpr::var(gk.at(tt, c))).collect()).collect();
    p.add_abs_bound(&rows, &vec![LinExpr::var(rho); t]);
    add_parametrization(&mut p, data.x0(), &gk);
    p.minimize(LinExpr::var(rho));

    let sol = p.solve(LP_TOL);
    diag.lp_variables = p.num_vars();
    diag.lp_constraints = p.num_constraints();
    diag.lp_residual = sol.residual;
    diag.solve_ms = start.elapsed().as_secs_f64() * 1e3;
    let status = lp_status(&sol);
    if status != SynthesisStatus::Feasible {
        return Ok(SynthesisResult::unsolved(spec, Method::Polytope, status, diag));
    }
    let gk_val = sol.block(&gk);
    Ok(SynthesisResult {
        method: Method::Polytope,
        status,
        lambda: spec.lambda,
        use_prior: spec.use_prior,
        bound_mode: spec.bound_mode,
        k: Some(data.u0() * &gk_val),
        gk: Some(gk_val),
        certificate: Some(Certificate::Dual { p: sol.block(&pm), rho: sol.value(rho) }),
        diagnostics: diag,
    })
}

/// Smallest `λ` (within `tol`) for which [`synthesize`] is feasible, or
/// `None` when infeasible at `λ = 1 − tol`.
pub fn min_lambda(spec: &SynthesisSpec, tol: f64) -> Result<Option<f64>> {
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::InvalidArgument(format!("bisection tolerance {tol}")));
    }
    let feasible = |lambda: f64| -> Result<bool> { Ok(synthesize(&spec.clone().with_lambda(lambda)?)?.is_feasible()) };
    let (mut lo, mut hi) = (0.0, 1.0 - tol);
    if !feasible(hi)? {
        return Ok(None);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Largest box level `b ≤ b_max` (within `tol`) with `Zw = [-b, b]ⁿ` for
/// which [`synthesize`] is feasible at the spec's `λ`.
///
/// Levels below the smallest one that explains the data (with the model set
/// when used) admit no consistent model; the search starts at that level. `None` when
/// the lower end is infeasible.
pub fn max_disturbance(spec: &SynthesisSpec, tol: f64, b_max: f64) -> Result<Option<f64>> {
    if !(tol > 0.0) || !(b_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("bisection tolerance {tol}, upper level {b_max}")));
    }
    let model = if spec.use_prior { spec.prior.model() } else { None };
    let floor = match min_consistent_box_level(&spec.data, model)? {
        Some(f) => f * (1.0 + 1e-6) + 1e-9,
        None => return Ok(None),
    };
    if floor > b_max {
        return Ok(None);
    }
    let feasible = |b: f64| -> Result<bool> { Ok(synthesize(&spec.clone().with_box_disturbance(b)?)?.is_feasible()) };
    if !feasible(floor)? {
        return Ok(None);
    }
    if feasible(b_max)? {
        return Ok(Some(b_max));
    }
    let (mut lo, mut hi) = (floor, b_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// One point of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub status: SynthesisStatus,
    #[serde(with = "serde_rows_opt")]
    pub k: Option<Mat>,
}

/// Synthesis status over a grid of `λ` values.
pub fn sweep_lambda(spec: &SynthesisSpec, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    grid.iter()
        .map(|&lambda| {
            let r = synthesize(&spec.clone().with_lambda(lambda)?)?;
            Ok(SweepPoint { value: lambda, status: r.status, k: r.k })
        })
        .collect()
}

/// Synthesis status over a grid of box disturbance levels.
pub fn sweep_disturbance(spec: &SynthesisSpec, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    grid.iter()
        .map(|&b| {
            let r = synthesize(&spec.clone().with_box_disturbance(b)?)?;
            Ok(SweepPoint { value: b, status: r.status, k: r.k })
        })
        .collect()
}
