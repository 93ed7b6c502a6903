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

use super::factor_witness;
use super::json::{CzRepr, ZonotopeRepr};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{block_diag, hstack, vconcat, Mat, Vector};

/// `⟨G, c⟩ = { Gζ + c : ‖ζ‖∞ ≤ 1 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ZonotopeRepr", into = "ZonotopeRepr")]
pub struct Zonotope {
    pub(crate) center: Vector,
    pub(crate) generators: Mat,
}

impl Zonotope {
    pub fn new(center: Vector, generators: Mat) -> Result<Self> {
        if generators.nrows() != center.len() {
            return dim_err(format!(
                "zonotope generators have {} rows, center has length {}",
                generators.nrows(),
                center.len()
            ));
        }
        Ok(Self { center, generators })
    }

    /// Axis-aligned box `[lower, upper]`; one generator per coordinate,
    /// zero-width coordinates keep a zero generator.
    pub fn from_box(lower: &Vector, upper: &Vector) -> Result<Self> {
        if lower.len() != upper.len() {
            return dim_err("box bounds have different lengths");
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
            return Err(Error::InvalidBounds(format!(
                "lower bound {} exceeds upper bound {} in coordinate {i}",
                lower[i], upper[i]
            )));
        }
        let center = (lower + upper) * 0.5;
        let generators = Mat::from_diagonal(&((upper - lower) * 0.5));
        Ok(Self { center, generators })
    }

    /// `[-b, b]ⁿ`.
    pub fn symmetric_box(n: usize, half_width: f64) -> Result<Self> {
        let b = Vector::from_element(n, half_width);
        Self::from_box(&(-&b), &b)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn generators(&self) -> &Mat {
        &self.generators
    }
}

/// `⟨G, c, A, b⟩ = { Gζ + c : ‖ζ‖∞ ≤ 1, Aζ = b }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CzRepr", into = "CzRepr")]
pub struct ConstrainedZonotope {
    pub(crate) center: Vector,
    pub(crate) generators: Mat,
    pub(crate) a: Mat,
    pub(crate) b: Vector,
}

impl From<Zonotope> for ConstrainedZonotope {
    fn from(z: Zonotope) -> Self {
        let s = z.generators.ncols();
        Self { center: z.center, generators: z.generators, a: Mat::zeros(0, s), b: Vector::zeros(0) }
    }
}

impl ConstrainedZonotope {
    pub fn new(center: Vector, generators: Mat, a: Mat, b: Vector) -> Result<Self> {
        if generators.nrows() != center.len() {
            return dim_err(format!(
                "generators have {} rows, center has length {}",
                generators.nrows(),
                center.len()
            ));
        }
        if a.ncols() != generators.ncols() {
            return dim_err(format!(
                "constraint matrix has {} columns for {} generators",
                a.ncols(),
                generators.ncols()
            ));
        }
        if a.nrows() != b.len() {
            return dim_err(format!("constraint matrix has {} rows, right side has {}", a.nrows(), b.len()));
        }
        Ok(Self { center, generators, a, b })
    }

    /// The single point `{x}` (no generators).
    pub fn point(x: Vector) -> Self {
        let n = x.len();
        Self { center: x, generators: Mat::zeros(n, 0), a: Mat::zeros(0, 0), b: Vector::zeros(0) }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn generators(&self) -> &Mat {
        &self.generators
    }

    pub fn constraint_matrix(&self) -> &Mat {
        &self.a
    }

    pub fn constraint_vector(&self) -> &Vector {
        &self.b
    }

    pub fn is_zonotope(&self) -> bool {
        self.a.nrows() == 0
    }

    pub fn point_from_factors(&self, zeta: &Vector) -> Vector {
        &self.generators * zeta + &self.center
    }

    /// Membership LP. Returns the factor witness when `x` lies in the set
    /// (constraints and factor bounds relaxed by `tol`).
    pub fn contains_point(&self, x: &Vector, tol: f64) -> Result<Option<Vector>> {
        if x.len() != self.dim() {
            return dim_err(format!("point of length {} tested against a set in R^{}", x.len(), self.dim()));
        }
        factor_witness(&self.generators, &(x - &self.center), &self.a, &self.b, tol)
    }

    /// Removes generators that are zero and unconstrained.
    pub fn prune_zero_generators(&self) -> Self {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| self.generators.column(j).iter().any(|&v| v != 0.0) || self.a.column(j).iter().any(|&v| v != 0.0))
            .collect();
        Self {
            center: self.center.clone(),
            generators: self.generators.select_columns(&keep),
            a: self.a.select_columns(&keep),
            b: self.b.clone(),
        }
    }
}

/// Minkowski sum `⟨[G₁ G₂], c₁+c₂, diag(A₁, A₂), [b₁; b₂]⟩`.
pub fn minkowski_sum(c1: &ConstrainedZonotope, c2: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    if c1.dim() != c2.dim() {
        return dim_err(format!("Minkowski sum of sets in R^{} and R^{}", c1.dim(), c2.dim()));
    }
    Ok(ConstrainedZonotope {
        center: &c1.center + &c2.center,
        generators: hstack(&[&c1.generators, &c2.generators])?,
        a: block_diag(&[&c1.a, &c2.a]),
        b: vconcat(&[&c1.b, &c2.b]),
    })
}

/// λ-scaled level set about the center: `⟨λG, c, A, λb⟩`.
pub fn scale_level_set(c: &ConstrainedZonotope, lambda: f64) -> Result<ConstrainedZonotope> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidArgument(format!("scaling level {lambda} outside (0, 1]")));
    }
    Ok(ConstrainedZonotope {
        center: c.center.clone(),
        generators: &c.generators * lambda,
        a: c.a.clone(),
        b: &c.b * lambda,
    })
}
