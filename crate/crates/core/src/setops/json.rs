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

//! JSON layouts: `{center, generators, A, b}` plus explicit shape fields so
//! empty blocks round-trip. Matrices are nested row-major arrays; matrix
//! zonotope generators are a list of such matrices.

use serde::{Deserialize, Serialize};

use super::czono::{ConstrainedZonotope, Zonotope};
use super::matrix::{ConstrainedMatrixZonotope, MatrixZonotope};
use super::polytope::Polytope;
use crate::error::Error;
use crate::numerics::{from_rows, to_rows, Vector};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ZonotopeRepr {
    dim: usize,
    num_generators: usize,
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CzRepr {
    dim: usize,
    num_generators: usize,
    num_constraints: usize,
    center: Vec<f64>,
    generators: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct MzRepr {
    rows: usize,
    cols: usize,
    num_generators: usize,
    center: Vec<Vec<f64>>,
    generators: Vec<Vec<Vec<f64>>>,
}

/// Constraints are vectorized: `A` is `num_constraints × num_generators`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CmzRepr {
    rows: usize,
    cols: usize,
    num_generators: usize,
    num_constraints: usize,
    center: Vec<Vec<f64>>,
    generators: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PolytopeRepr {
    dim: usize,
    num_halfspaces: usize,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    h_rhs: Vec<f64>,
}

fn check_len(what: &str, got: usize, want: usize) -> Result<(), Error> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: expected {want} entries, found {got}")));
    }
    Ok(())
}

fn columns(rows: &[Vec<f64>], n: usize, s: usize, what: &str) -> Result<crate::numerics::Mat, Error> {
    check_len(what, rows.len(), n)?;
    from_rows(rows, s)
}

impl From<Zonotope> for ZonotopeRepr {
    fn from(z: Zonotope) -> Self {
        Self {
            dim: z.dim(),
            num_generators: z.num_generators(),
            center: z.center.as_slice().to_vec(),
            generators: to_rows(&z.generators),
        }
    }
}

impl TryFrom<ZonotopeRepr> for Zonotope {
    type Error = Error;
    fn try_from(r: ZonotopeRepr) -> Result<Self, Error> {
        check_len("center", r.center.len(), r.dim)?;
        let g = columns(&r.generators, r.dim, r.num_generators, "generators")?;
        Zonotope::new(Vector::from_vec(r.center), g)
    }
}

impl From<ConstrainedZonotope> for CzRepr {
    fn from(c: ConstrainedZonotope) -> Self {
        Self {
            dim: c.dim(),
            num_generators: c.num_generators(),
            num_constraints: c.num_constraints(),
            center: c.center.as_slice().to_vec(),
            generators: to_rows(&c.generators),
            a: to_rows(&c.a),
            b: c.b.as_slice().to_vec(),
        }
    }
}

impl TryFrom<CzRepr> for ConstrainedZonotope {
    type Error = Error;
    fn try_from(r: CzRepr) -> Result<Self, Error> {
        check_len("center", r.center.len(), r.dim)?;
        check_len("b", r.b.len(), r.num_constraints)?;
        let g = columns(&r.generators, r.dim, r.num_generators, "generators")?;
        let a = columns(&r.a, r.num_constraints, r.num_generators, "A")?;
        ConstrainedZonotope::new(Vector::from_vec(r.center), g, a, Vector::from_vec(r.b))
    }
}

impl From<MatrixZonotope> for MzRepr {
    fn from(m: MatrixZonotope) -> Self {
        let (rows, cols) = m.shape();
        Self {
            rows,
            cols,
            num_generators: m.num_generators(),
            center: to_rows(&m.center),
            generators: m.generators.iter().map(to_rows).collect(),
        }
    }
}

impl TryFrom<MzRepr> for MatrixZonotope {
    type Error = Error;
    fn try_from(r: MzRepr) -> Result<Self, Error> {
        check_len("generators", r.generators.len(), r.num_generators)?;
        let center = columns(&r.center, r.rows, r.cols, "center")?;
        let gens = r
            .generators
            .iter()
            .map(|g| columns(g, r.rows, r.cols, "generator"))
            .collect::<Result<Vec<_>, _>>()?;
        MatrixZonotope::new(center, gens)
    }
}

impl From<ConstrainedMatrixZonotope> for CmzRepr {
    fn from(m: ConstrainedMatrixZonotope) -> Self {
        let (rows, cols) = m.shape();
        Self {
            rows,
            cols,
            num_generators: m.num_generators(),
            num_constraints: m.num_constraints(),
            center: to_rows(&m.center),
            generators: m.generators.iter().map(to_rows).collect(),
            a: to_rows(&m.a),
            b: m.b.as_slice().to_vec(),
        }
    }
}

impl TryFrom<CmzRepr> for ConstrainedMatrixZonotope {
    type Error = Error;
    fn try_from(r: CmzRepr) -> Result<Self, Error> {
        check_len("generators", r.generators.len(), r.num_generators)?;
        check_len("b", r.b.len(), r.num_constraints)?;
        let center = columns(&r.center, r.rows, r.cols, "center")?;
        let gens = r
            .generators
            .iter()
            .map(|g| columns(g, r.rows, r.cols, "generator"))
            .collect::<Result<Vec<_>, _>>()?;
        let a = columns(&r.a, r.num_constraints, r.num_generators, "A")?;
        ConstrainedMatrixZonotope::new(center, gens, a, Vector::from_vec(r.b))
    }
}

impl From<Polytope> for PolytopeRepr {
    fn from(p: Polytope) -> Self {
        Self { dim: p.dim(), num_halfspaces: p.num_halfspaces(), h: to_rows(&p.h), h_rhs: p.rhs.as_slice().to_vec() }
    }
}

impl TryFrom<PolytopeRepr> for Polytope {
    type Error = Error;
    fn try_from(r: PolytopeRepr) -> Result<Self, Error> {
        check_len("h_rhs", r.h_rhs.len(), r.num_halfspaces)?;
        let h = columns(&r.h, r.num_halfspaces, r.dim, "H")?;
        Polytope::new(h, Vector::from_vec(r.h_rhs))
    }
}

#[cfg(test)]
mod tests {
    use crate::numerics::{Mat, Vector};
    use crate::setops::*;
    use proptest::prelude::*;

    #[test]
    fn empty_blocks_round_trip() {
        let c = ConstrainedZonotope::point(Vector::from_column_slice(&[1.0, 2.0]));
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"A\""));
        let back: ConstrainedZonotope = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let bad = r#"{"dim":2,"num_generators":1,"num_constraints":0,"center":[0.0],"generators":[[1.0],[0.0]],"A":[],"b":[]}"#;
        assert!(serde_json::from_str::<ConstrainedZonotope>(bad).is_err());
    }

    #[test]
    fn cmz_round_trip() {
        let z: ConstrainedZonotope = Zonotope::symmetric_box(2, 0.1).unwrap().into();
        let m = concat_t(&z, 3).unwrap();
        let back: ConstrainedMatrixZonotope = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let p = Polytope::unit_box(2);
        let back: Polytope = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn czonotope_json_round_trip(vals in prop::collection::vec(-1e3f64..1e3, 11)) {
            let c = ConstrainedZonotope::new(
                Vector::from_column_slice(&vals[0..2]),
                Mat::from_row_slice(2, 3, &vals[2..8]),
                Mat::from_row_slice(1, 3, &vals[8..11]),
                Vector::from_column_slice(&vals[0..1]),
            ).unwrap();
            let back: ConstrainedZonotope = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn matrix_zonotope_json_round_trip(vals in prop::collection::vec(-10f64..10.0, 12)) {
            let lower = Mat::from_row_slice(2, 3, &vals[0..6]);
            let upper = &lower + Mat::from_row_slice(2, 3, &vals[6..12]).abs();
            let m = MatrixZonotope::from_intervals(&lower, &upper).unwrap();
            let back: MatrixZonotope = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
