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

//! Solver-agnostic linear programs.
//!
//! Problems are assembled from named variable blocks and affine
//! expressions, then handed to the dual simplex of `minilp`. Every
//! absolute-value bound in the crate goes through [`LpProblem::add_abs_bound`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::numerics::Mat;

/// Default feasibility tolerance for reported solutions.
pub const LP_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A rectangular block of decision variables, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    start: usize,
    rows: usize,
    cols: usize,
}

impl Block {
    pub fn at(&self, i: usize, j: usize) -> VarId {
        debug_assert!(i < self.rows && j < self.cols);
        VarId(self.start + i * self.cols + j)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Affine expression `Σ coef·var + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
    constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: VarId) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((v, coef));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        for &(v, c) in &other.terms {
            self.add_term(v, c * scale);
        }
        self.constant += other.constant * scale;
        self
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Merges duplicate variables and drops zero coefficients.
    fn merged(&self) -> Vec<(VarId, f64)> {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        acc.into_iter().filter(|&(_, c)| c != 0.0).collect()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>() + self.constant
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::var(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
    Feasibility,
}

#[derive(Clone, Debug)]
struct Constraint {
    terms: Vec<(VarId, f64)>,
    cmp: Cmp,
    rhs: f64,
}

#[derive(Clone, Debug)]
pub struct LpProblem {
    blocks: Vec<(String, Block)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: LinExpr,
    sense: Sense,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    values: Vec<f64>,
    pub objective: f64,
    /// Largest absolute violation over constraints and bounds.
    pub residual: f64,
}

impl LpSolution {
    fn failed(status: LpStatus) -> Self {
        Self { status, values: Vec::new(), objective: f64::NAN, residual: f64::INFINITY }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn block(&self, b: &Block) -> Mat {
        Mat::from_fn(b.rows, b.cols, |i, j| self.values[b.at(i, j).0])
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.values)
    }
}

impl Default for LpProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl LpProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            objective: LinExpr::new(),
            sense: Sense::Feasibility,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_block(&mut self, name: &str, rows: usize, cols: usize, lower: f64, upper: f64) -> Block {
        let block = Block { start: self.lower.len(), rows, cols };
        self.lower.extend(std::iter::repeat(lower).take(rows * cols));
        self.upper.extend(std::iter::repeat(upper).take(rows * cols));
        self.blocks.push((name.to_string(), block));
        block
    }

    pub fn add_free_block(&mut self, name: &str, rows: usize, cols: usize) -> Block {
        self.add_block(name, rows, cols, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_var(&mut self, name: &str, lower: f64, upper: f64) -> VarId {
        self.add_block(name, 1, 1, lower, upper).at(0, 0)
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) {
        self.lower[v.0] = lower;
        self.upper[v.0] = upper;
    }

    /// Adds `expr cmp rhs`; the constant part of `expr` is moved to the right side.
    pub fn constrain(&mut self, expr: &LinExpr, cmp: Cmp, rhs: f64) {
        self.constraints.push(Constraint { terms: expr.merged(), cmp, rhs: rhs - expr.constant });
    }

    pub fn eq(&mut self, expr: &LinExpr, rhs: f64) {
        self.constrain(expr, Cmp::Eq, rhs)
    }

    pub fn le(&mut self, expr: &LinExpr, rhs: f64) {
        self.constrain(expr, Cmp::Le, rhs)
    }

    pub fn ge(&mut self, expr: &LinExpr, rhs: f64) {
        self.constrain(expr, Cmp::Ge, rhs)
    }

    pub fn minimize(&mut self, expr: LinExpr) {
        self.objective = expr;
        self.sense = Sense::Minimize;
    }

    pub fn maximize(&mut self, expr: LinExpr) {
        self.objective = expr;
        self.sense = Sense::Maximize;
    }

    /// Encodes `Σ_k |rows[r][k]| ≤ rhs[r]` for every row `r`.
    ///
    /// One nonnegative auxiliary `u` per expression with `-u ≤ e ≤ u`, and the
    /// row sums of `u` bounded by the (affine) right side. Returns the auxiliaries.
    pub fn add_abs_bound(&mut self, rows: &[Vec<LinExpr>], rhs: &[LinExpr]) -> Vec<Vec<VarId>> {
        assert_eq!(rows.len(), rhs.len(), "one right side per absolute-sum row");
        let mut aux = Vec::with_capacity(rows.len());
        for (r, (row, bound)) in rows.iter().zip(rhs).enumerate() {
            let block = self.add_block(&format!("abs{}_{r}", self.blocks.len()), 1, row.len(), 0.0, f64::INFINITY);
            let mut sum = LinExpr::new();
            let mut ids = Vec::with_capacity(row.len());
            for (k, e) in row.iter().enumerate() {
                let u = block.at(0, k);
                ids.push(u);
                let mut upper = e.clone();
                upper.add_term(u, -1.0);
                self.le(&upper, 0.0);
                let mut lower = e.clone();
                lower.add_term(u, 1.0);
                self.ge(&lower, 0.0);
                sum.add_term(u, 1.0);
            }
            sum.add_expr(bound, -1.0);
            self.le(&sum, 0.0);
            aux.push(ids);
        }
        aux
    }

    /// Worst absolute violation of constraints and bounds at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * x[v.0]).sum();
            let viol = match c.cmp {
                Cmp::Eq => (lhs - c.rhs).abs(),
                Cmp::Le => (lhs - c.rhs).max(0.0),
                Cmp::Ge => (c.rhs - lhs).max(0.0),
            };
            worst = worst.max(viol);
        }
        for (i, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[i] - v).max(v - self.upper[i]);
        }
        worst
    }

    /// Solves with the dual simplex. Deterministic for identical input.
    ///
    /// Solver panics and solutions whose residual exceeds `tol` (relative to
    /// the magnitude of the right side) are reported as numerical failures.
    pub fn solve(&self, tol: f64) -> LpSolution {
        let direction = match self.sense {
            Sense::Maximize => OptimizationDirection::Maximize,
            _ => OptimizationDirection::Minimize,
        };
        let mut obj = vec![0.0; self.num_vars()];
        if self.sense != Sense::Feasibility {
            for (v, c) in self.objective.merged() {
                obj[v.0] += c;
            }
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let mut pb = Problem::new(direction);
            let vars: Vec<_> = (0..self.num_vars())
                .map(|i| pb.add_var(obj[i], (self.lower[i], self.upper[i])))
                .collect();
            for c in &self.constraints {
                let expr: Vec<_> = c.terms.iter().map(|&(v, a)| (vars[v.0], a)).collect();
                let op = match c.cmp {
                    Cmp::Eq => ComparisonOp::Eq,
                    Cmp::Le => ComparisonOp::Le,
                    Cmp::Ge => ComparisonOp::Ge,
                };
                pb.add_constraint(expr.as_slice(), op, c.rhs);
            }
            pb.solve().map(|sol| vars.iter().map(|&v| *sol.var_value(v)).collect::<Vec<f64>>())
        }));
        match outcome {
            Err(_) => LpSolution::failed(LpStatus::NumericalFailure),
            Ok(Err(minilp::Error::Infeasible)) => LpSolution::failed(LpStatus::Infeasible),
            Ok(Err(minilp::Error::Unbounded)) => LpSolution::failed(LpStatus::Unbounded),
            Ok(Ok(values)) => {
                let residual = self.residual(&values);
                let scale = self.constraints.iter().fold(1.0f64, |m, c| m.max(c.rhs.abs()));
                let objective = if self.sense == Sense::Feasibility {
                    0.0
                } else {
                    self.objective.eval(&values)
                };
                let status = if residual <= tol * scale && values.iter().all(|v| v.is_finite()) {
                    LpStatus::Optimal
                } else {
                    LpStatus::NumericalFailure
                };
                LpSolution { status, values, objective, residual }
            }
        }
    }

    fn var_name(&self, v: usize) -> String {
        for (name, b) in &self.blocks {
            if v >= b.start && v < b.start + b.len() {
                let k = v - b.start;
                return format!("{}_{}_{}", sanitize(name), k / b.cols, k % b.cols);
            }
        }
        format!("x{v}")
    }

    /// CPLEX LP text, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let fmt_terms = |terms: &[(VarId, f64)]| -> String {
            terms
                .iter()
                .map(|&(v, c)| format!("{} {:e} {}", if c < 0.0 { "-" } else { "+" }, c.abs(), self.var_name(v.0)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let head = match self.sense {
            Sense::Maximize => "Maximize",
            _ => "Minimize",
        };
        let obj = if self.sense == Sense::Feasibility { Vec::new() } else { self.objective.merged() };
        let _ = writeln!(out, "{head}\n obj: {}", fmt_terms(&obj));
        let _ = writeln!(out, "Subject To");
        for (i, c) in self.constraints.iter().enumerate() {
            let op = match c.cmp {
                Cmp::Eq => "=",
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
            };
            if c.terms.is_empty() {
                let _ = writeln!(out, "\\ c{i}: 0 {op} {:e}", c.rhs);
            } else {
                let _ = writeln!(out, " c{i}: {} {op} {:e}", fmt_terms(&c.terms), c.rhs);
            }
        }
        let _ = writeln!(out, "Bounds");
        for i in 0..self.num_vars() {
            let name = self.var_name(i);
            let (l, u) = (self.lower[i], self.upper[i]);
            let _ = match (l.is_finite(), u.is_finite()) {
                (false, false) => writeln!(out, " {name} free"),
                (true, false) => writeln!(out, " {name} >= {l:e}"),
                (false, true) => writeln!(out, " -inf <= {name} <= {u:e}"),
                (true, true) => writeln!(out, " {l:e} <= {name} <= {u:e}"),
            };
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}
