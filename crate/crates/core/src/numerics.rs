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

//! Dense real-matrix helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{dim_err, Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Matrix infinity norm: the largest absolute row sum.
///
/// For a row or column vector this is the largest absolute entry of a
/// column vector or the absolute sum of a row vector, consistent with the
/// induced-norm definition.
pub fn inf_norm(m: &Mat) -> Result<f64> {
    if m.is_empty() {
        return dim_err("infinity norm of an empty matrix");
    }
    Ok(m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Largest absolute entry of a vector.
pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Column-stacking vectorization.
pub fn vec(m: &Mat) -> Vector {
    // nalgebra stores column-major, which is exactly the stacking order
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`] for a known shape.
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Mat> {
    if v.len() != rows * cols {
        return dim_err(format!(
            "cannot reshape length {} into {rows}x{cols}",
            v.len()
        ));
    }
    Ok(Mat::from_column_slice(rows, cols, v.as_slice()))
}

/// Numerical rank via singular values, thresholded relative to the largest one.
pub fn rank(m: &Mat, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

pub fn row_rank_full(m: &Mat, tol: f64) -> bool {
    m.nrows() <= m.ncols() && rank(m, tol) == m.nrows()
}

/// Minimum-norm right inverse `Mᵀ(MMᵀ)⁻¹`, computed through the SVD.
pub fn right_inverse(m: &Mat, tol: f64) -> Result<Mat> {
    if !row_rank_full(m, tol) {
        return Err(Error::NoRightInverse);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.pseudo_inverse(tol * smax)
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Orthonormal basis of the null space of `m` (columns of the result).
pub fn null_space(m: &Mat, tol: f64) -> Mat {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return Mat::identity(cols, cols);
    }
    // pad to a square so the full V factor is available
    let padded = if m.nrows() < cols {
        let mut p = Mat::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V factor");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thresh = if smax == 0.0 { 0.0 } else { tol * smax };
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= thresh)
        .collect();
    let mut basis = Mat::zeros(cols, kept.len());
    for (k, &i) in kept.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    basis
}

pub fn hstack(blocks: &[&Mat]) -> Result<Mat> {
    let rows = match blocks.first() {
        Some(b) => b.nrows(),
        None => return Ok(Mat::zeros(0, 0)),
    };
    if blocks.iter().any(|b| b.nrows() != rows) {
        return dim_err("hstack: row counts differ");
    }
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    Ok(out)
}

pub fn vstack(blocks: &[&Mat]) -> Result<Mat> {
    let cols = match blocks.first() {
        Some(b) => b.ncols(),
        None => return Ok(Mat::zeros(0, 0)),
    };
    if blocks.iter().any(|b| b.ncols() != cols) {
        return dim_err("vstack: column counts differ");
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    Ok(out)
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn vconcat(parts: &[&Vector]) -> Vector {
    let data: Vec<f64> = parts.iter().flat_map(|p| p.iter().cloned()).collect();
    Vector::from_vec(data)
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Row-major nested representation, as used by the JSON formats.
pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

/// Builds a matrix from row-major nested rows. `cols` disambiguates the
/// zero-row case.
pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Mat> {
    if rows.iter().any(|r| r.len() != cols) {
        return dim_err(format!("ragged matrix rows, expected {cols} columns"));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Serde adapter: a matrix as nested row-major arrays.
pub mod serde_rows {
    use super::{from_rows, to_rows, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let cols = rows.first().map_or(0, |r| r.len());
        from_rows(&rows, cols).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<Mat>`; `None` is `null`.
pub mod serde_rows_opt {
    use super::{from_rows, to_rows, Mat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Mat>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Mat>, D::Error> {
        match Option::<Vec<Vec<f64>>>::deserialize(d)? {
            Some(rows) => {
                let cols = rows.first().map_or(0, |r| r.len());
                from_rows(&rows, cols).map(Some).map_err(serde::de::Error::custom)
            }
            None => Ok(None),
        }
    }
}

/// Serde adapter: a vector as a flat array.
pub mod serde_vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_row_sums(m: &Mat) -> f64 {
        let mut best = 0.0f64;
        for i in 0..m.nrows() {
            let mut s = 0.0;
            for j in 0..m.ncols() {
                s += m[(i, j)].abs();
            }
            best = best.max(s);
        }
        best
    }

    #[test]
    fn inf_norm_examples() {
        assert_eq!(inf_norm(&Mat::identity(2, 2)).unwrap(), 1.0);
        let m = Mat::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.0]);
        // both rows sum to 3
        assert_eq!(brute_row_sums(&m), 3.0);
        assert_eq!(inf_norm(&m).unwrap(), 3.0);
        assert_eq!(inf_norm(&Mat::zeros(3, 2)).unwrap(), 0.0);
        assert!(matches!(inf_norm(&Mat::zeros(0, 0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn vec_examples() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec(&m).as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        let col = Mat::from_column_slice(3, 1, &[5.0, 6.0, 7.0]);
        assert_eq!(vec(&col).as_slice(), &[5.0, 6.0, 7.0]);
        let row = Mat::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert_eq!(vec(&row).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(unvec(&vec(&m), 2, 2).unwrap(), m);
    }

    #[test]
    fn rank_examples() {
        assert!(row_rank_full(&Mat::identity(2, 2), 1e-9));
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(!row_rank_full(&m, 1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = Mat::from_fn(2, 10, |_, _| rng.gen_range(-1.0..1.0));
        assert!(row_rank_full(&r, 1e-9));
        // elimination oracle: a 2-row matrix has full row rank iff some 2x2 minor is nonzero
        let minor = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .map(|(i, j)| (r[(0, i)] * r[(1, j)] - r[(0, j)] * r[(1, i)]).abs())
            .fold(0.0, f64::max);
        assert!(minor > 1e-9);
        // more rows than columns never has full row rank
        assert!(!row_rank_full(&Mat::identity(3, 2), 1e-9));
    }

    #[test]
    fn right_inverse_examples() {
        let i2 = Mat::identity(2, 2);
        assert!((right_inverse(&i2, 1e-9).unwrap() - &i2).abs().max() < 1e-12);

        let padded = Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let r = right_inverse(&padded, 1e-9).unwrap();
        assert_eq!(r.shape(), (3, 2));
        assert!(r.row(2).iter().all(|v| v.abs() < 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mat::from_fn(2, 6, |_, _| rng.gen_range(-1.0..1.0));
        let r = right_inverse(&m, 1e-9).unwrap();
        assert!((&m * &r - &i2).abs().max() < 1e-8);

        let deficient = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(right_inverse(&deficient, 1e-9), Err(Error::NoRightInverse)));
    }

    #[test]
    fn null_space_is_orthogonal_complement() {
        let a = Mat::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let n = null_space(&a, 1e-12);
        assert_eq!(n.ncols(), 2);
        assert!((&a * &n).abs().max() < 1e-12);
        assert_eq!(null_space(&Mat::zeros(0, 4), 1e-12).ncols(), 4);
    }

    fn small_mat() -> impl Strategy<Value = Mat> {
        prop::collection::vec(-10.0f64..10.0, 6).prop_map(|v| Mat::from_row_slice(2, 3, &v))
    }

    proptest! {
        #[test]
        fn vec_is_linear(m in small_mat(), n in small_mat(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let lhs = vec(&(&m * a + &n * b));
            let rhs = vec(&m) * a + vec(&n) * b;
            prop_assert!((lhs - rhs).abs().max() < 1e-12);
        }

        #[test]
        fn inf_norm_is_a_norm(m in small_mat(), n in small_mat(), a in -5.0f64..5.0) {
            let sum = inf_norm(&(&m + &n)).unwrap();
            prop_assert!(sum <= inf_norm(&m).unwrap() + inf_norm(&n).unwrap() + 1e-12);
            let scaled = inf_norm(&(&m * a)).unwrap();
            prop_assert!((scaled - a.abs() * inf_norm(&m).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn right_inverse_residual(v in prop::collection::vec(-1.0f64..1.0, 8)) {
            let m = Mat::from_row_slice(2, 4, &v);
            let tol = 1e-6;
            if row_rank_full(&m, tol) {
                let r = right_inverse(&m, tol).unwrap();
                let res = inf_norm(&(&m * r - Mat::identity(2, 2))).unwrap();
                prop_assert!(res <= 10.0 * tol);
            }
        }
    }
}
