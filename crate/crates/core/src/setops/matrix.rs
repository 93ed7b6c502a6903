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
use super::factor_witness;
use super::json::{CmzRepr, MzRepr};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{block_diag, vconcat, vec, Mat, Vector};

/// `⟨G, C⟩ = { Σ Gᵢζᵢ + C : ‖ζ‖∞ ≤ 1 }` over matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MzRepr", into = "MzRepr")]
pub struct MatrixZonotope {
    pub(crate) center: Mat,
    pub(crate) generators: Vec<Mat>,
}

impl MatrixZonotope {
    pub fn new(center: Mat, generators: Vec<Mat>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.shape() != center.shape()) {
            return dim_err(format!("generator of shape {:?} for center {:?}", g.shape(), center.shape()));
        }
        Ok(Self { center, generators })
    }

    /// Interval matrix `[lower, upper]` as a matrix zonotope.
    ///
    /// One generator per entry of nonzero width, in row-major entry order,
    /// holding the half-width at that entry.
    pub fn from_intervals(lower: &Mat, upper: &Mat) -> Result<Self> {
        if lower.shape() != upper.shape() {
            return dim_err(format!("interval bounds of shapes {:?} and {:?}", lower.shape(), upper.shape()));
        }
        let (rows, cols) = lower.shape();
        let mut generators = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let (lo, hi) = (lower[(i, j)], upper[(i, j)]);
                if !(lo <= hi) {
                    return Err(Error::InvalidBounds(format!("entry ({i}, {j}): lower {lo} exceeds upper {hi}")));
                }
                if hi > lo {
                    let mut g = Mat::zeros(rows, cols);
                    g[(i, j)] = (hi - lo) / 2.0;
                    generators.push(g);
                }
            }
        }
        Ok(Self { center: (lower + upper) * 0.5, generators })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn center(&self) -> &Mat {
        &self.center
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }
}

/// `⟨G, C, A_C, B_C⟩ = { Σ Gᵢζᵢ + C : Σ A_Cᵢζᵢ = B_C, ‖ζ‖∞ ≤ 1 }`.
///
/// The constraint generators are held vectorized (see the module docs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CmzRepr", into = "CmzRepr")]
pub struct ConstrainedMatrixZonotope {
    pub(crate) center: Mat,
    pub(crate) generators: Vec<Mat>,
    pub(crate) a: Mat,
    pub(crate) b: Vector,
}

impl From<MatrixZonotope> for ConstrainedMatrixZonotope {
    fn from(m: MatrixZonotope) -> Self {
        let s = m.generators.len();
        Self { center: m.center, generators: m.generators, a: Mat::zeros(0, s), b: Vector::zeros(0) }
    }
}

impl ConstrainedMatrixZonotope {
    /// Builds from vectorized constraints: `a` is `q × s`, `b` has length `q`.
    pub fn new(center: Mat, generators: Vec<Mat>, a: Mat, b: Vector) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.shape() != center.shape()) {
            return dim_err(format!("generator of shape {:?} for center {:?}", g.shape(), center.shape()));
        }
        if a.ncols() != generators.len() {
            return dim_err(format!("{} constraint columns for {} generators", a.ncols(), generators.len()));
        }
        if a.nrows() != b.len() {
            return dim_err(format!("constraint matrix has {} rows, right side has {}", a.nrows(), b.len()));
        }
        Ok(Self { center, generators, a, b })
    }

    /// Builds from matrix-shaped constraint generators `A_Cᵢ` and `B_C`.
    pub fn with_matrix_constraints(center: Mat, generators: Vec<Mat>, a_list: &[Mat], b: &Mat) -> Result<Self> {
        if a_list.len() != generators.len() {
            return dim_err(format!("{} constraint generators for {} generators", a_list.len(), generators.len()));
        }
        if let Some(ai) = a_list.iter().find(|ai| ai.shape() != b.shape()) {
            return dim_err(format!("constraint generator {:?} vs right side {:?}", ai.shape(), b.shape()));
        }
        let q = b.len();
        let mut a = Mat::zeros(q, a_list.len());
        for (i, ai) in a_list.iter().enumerate() {
            a.set_column(i, &vec(ai));
        }
        Self::new(center, generators, a, vec(b))
    }

    /// A single matrix.
    pub fn point(x: Mat) -> Self {
        Self { center: x, generators: Vec::new(), a: Mat::zeros(0, 0), b: Vector::zeros(0) }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.shape()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn center(&self) -> &Mat {
        &self.center
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    /// Vectorized constraint matrix (`q × s`).
    pub fn constraint_matrix(&self) -> &Mat {
        &self.a
    }

    pub fn constraint_vector(&self) -> &Vector {
        &self.b
    }

    pub fn point_from_factors(&self, zeta: &Vector) -> Mat {
        let mut x = self.center.clone();
        for (g, &z) in self.generators.iter().zip(zeta.iter()) {
            x += g * z;
        }
        x
    }

    /// `{X·N : X ∈ self}`: generators `GᵢN`, center `CN`, constraints unchanged.
    pub fn right_mul(&self, n: &Mat) -> Result<Self> {
        if self.center.ncols() != n.nrows() {
            return dim_err(format!("right multiplication of {:?} by {:?}", self.shape(), n.shape()));
        }
        Ok(Self {
            center: &self.center * n,
            generators: self.generators.iter().map(|g| g * n).collect(),
            a: self.a.clone(),
            b: self.b.clone(),
        })
    }

    /// `{X·v : X ∈ self}` as a constrained zonotope with `Vec(A_C)`, `Vec(B_C)`.
    pub fn right_mul_vec(&self, v: &Vector) -> Result<ConstrainedZonotope> {
        if self.center.ncols() != v.len() {
            return dim_err(format!("right multiplication of {:?} by a vector of length {}", self.shape(), v.len()));
        }
        let n = self.center.nrows();
        let mut g = Mat::zeros(n, self.generators.len());
        for (i, gi) in self.generators.iter().enumerate() {
            g.set_column(i, &(gi * v));
        }
        ConstrainedZonotope::new(&self.center * v, g, self.a.clone(), self.b.clone())
    }

    /// `{-X : X ∈ self}`. Generators flip sign, factor constraints are kept.
    pub fn neg(&self) -> Self {
        Self {
            center: -&self.center,
            generators: self.generators.iter().map(|g| -g).collect(),
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }

    /// `{X + offset : X ∈ self}`.
    pub fn translate(&self, offset: &Mat) -> Result<Self> {
        if offset.shape() != self.shape() {
            return dim_err(format!("translation by {:?} of a set of shape {:?}", offset.shape(), self.shape()));
        }
        Ok(Self { center: &self.center + offset, ..self.clone() })
    }

    /// Generators as the columns `Vec(Gᵢ)` of one matrix.
    pub(crate) fn generator_columns(&self) -> Mat {
        let (r, c) = self.shape();
        let mut cols = Mat::zeros(r * c, self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            cols.set_column(i, &vec(g));
        }
        cols
    }

    /// Membership LP for a matrix; returns the factor witness when feasible.
    pub fn contains_matrix(&self, x: &Mat, tol: f64) -> Result<Option<Vector>> {
        if x.shape() != self.shape() {
            return dim_err(format!("matrix {:?} tested against a set of shape {:?}", x.shape(), self.shape()));
        }
        factor_witness(&self.generator_columns(), &vec(&(x - &self.center)), &self.a, &self.b, tol)
    }
}

/// `T`-concatenation of a constrained zonotope into an `n × T` matrix set.
///
/// Generator `(t, i)` (index `t·s_w + i`) carries column `i` of `G` in matrix
/// column `t`; the constraint blocks follow the same placement, so the
/// columns of any member are independent members of `zw`.
pub fn concat_t(zw: &ConstrainedZonotope, t: usize) -> Result<ConstrainedMatrixZonotope> {
    if t == 0 {
        return Err(Error::InvalidArgument("concatenation length must be at least 1".into()));
    }
    let n = zw.dim();
    let s = zw.num_generators();
    let q = zw.num_constraints();
    let mut generators = Vec::with_capacity(t * s);
    let mut a = Mat::zeros(q * t, s * t);
    for col in 0..t {
        for i in 0..s {
            let mut g = Mat::zeros(n, t);
            g.set_column(col, &zw.generators.column(i));
            generators.push(g);
            a.view_mut((col * q, col * s + i), (q, 1)).copy_from(&zw.a.column(i));
        }
    }
    let center = Mat::from_fn(n, t, |r, _| zw.center[r]);
    let b = Vector::from_fn(q * t, |k, _| zw.b[k % q.max(1)]);
    ConstrainedMatrixZonotope::new(center, generators, a, b)
}

/// Exact intersection of two constrained matrix zonotopes of equal shape.
///
/// Factors are `[ζ¹; ζ²]`; generators `[G¹ 0]`, center `C¹`, and the
/// constraint stack `A¹ζ¹ = B¹`, `A²ζ² = B²`, `Σ G¹ᵢζ¹ᵢ − Σ G²ⱼζ²ⱼ = C² − C¹`.
pub fn intersect_cmz(m1: &ConstrainedMatrixZonotope, m2: &ConstrainedMatrixZonotope) -> Result<ConstrainedMatrixZonotope> {
    if m1.shape() != m2.shape() {
        return dim_err(format!("intersection of shapes {:?} and {:?}", m1.shape(), m2.shape()));
    }
    let (r, c) = m1.shape();
    let s1 = m1.num_generators();
    let s2 = m2.num_generators();
    let mut generators = m1.generators.clone();
    generators.extend(std::iter::repeat(Mat::zeros(r, c)).take(s2));

    let coupling = {
        let mut k = Mat::zeros(r * c, s1 + s2);
        k.view_mut((0, 0), (r * c, s1)).copy_from(&m1.generator_columns());
        k.view_mut((0, s1), (r * c, s2)).copy_from(&(-m2.generator_columns()));
        k
    };
    let diag = block_diag(&[&m1.a, &m2.a]);
    let mut a = Mat::zeros(diag.nrows() + r * c, s1 + s2);
    a.view_mut((0, 0), diag.shape()).copy_from(&diag);
    a.view_mut((diag.nrows(), 0), coupling.shape()).copy_from(&coupling);
    let b = vconcat(&[&m1.b, &m2.b, &vec(&(&m2.center - &m1.center))]);
    ConstrainedMatrixZonotope::new(m1.center.clone(), generators, a, b)
}

/// Over-approximation of `{X·x : X ∈ m, x ∈ c}`.
///
/// Generator blocks, in order: `Gᵢc_x` for each generator of `m`, then
/// `C·G_x`, then the cross terms `Gᵢ·g_j` (index `i·s_x + j`) carried by
/// fresh unconstrained factors. The constraints of `m` act on the first
/// block and those of `c` on the second.
pub fn cmz_times_cz(m: &ConstrainedMatrixZonotope, c: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    let (rows, cols) = m.shape();
    if cols != c.dim() {
        return dim_err(format!("product of a {rows}x{cols} matrix set with a set in R^{}", c.dim()));
    }
    let s = m.num_generators();
    let sx = c.num_generators();
    let total = s + sx + s * sx;
    let mut g = Mat::zeros(rows, total);
    for (i, gi) in m.generators.iter().enumerate() {
        g.set_column(i, &(gi * &c.center));
    }
    g.view_mut((0, s), (rows, sx)).copy_from(&(&m.center * &c.generators));
    for (i, gi) in m.generators.iter().enumerate() {
        let cross = gi * &c.generators;
        g.view_mut((0, s + sx + i * sx), (rows, sx)).copy_from(&cross);
    }
    let diag = block_diag(&[&m.a, &c.a]);
    let mut a = Mat::zeros(diag.nrows(), total);
    a.view_mut((0, 0), diag.shape()).copy_from(&diag);
    let b = vconcat(&[&m.b, &c.b]);
    ConstrainedZonotope::new(&m.center * &c.center, g, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::FactorSampler;
    use crate::setops::{Zonotope, MEMBERSHIP_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// A constrained matrix zonotope whose factor set contains `zeta0`.
    fn random_cmz(rng: &mut ChaCha8Rng, r: usize, c: usize, s: usize, q: usize) -> ConstrainedMatrixZonotope {
        let gens = (0..s).map(|_| rand_mat(rng, r, c)).collect();
        let a = rand_mat(rng, q, s);
        let zeta0 = Vector::from_fn(s, |_, _| rng.gen_range(-0.5..0.5));
        let b = &a * zeta0;
        ConstrainedMatrixZonotope::new(rand_mat(rng, r, c), gens, a, b).unwrap()
    }

    #[test]
    fn interval_matrix_examples() {
        let exact = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = MatrixZonotope::from_intervals(&exact, &exact).unwrap();
        assert_eq!(m.num_generators(), 0);
        assert_eq!(m.center, exact);

        let m = MatrixZonotope::from_intervals(&Mat::zeros(1, 1), &Mat::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(m.center[(0, 0)], 1.0);
        assert_eq!(m.generators, vec![Mat::from_element(1, 1, 1.0)]);

        // prior box on [A B]
        let lower = Mat::from_row_slice(2, 3, &[0.6, 0.35, -0.1, -0.5, 1.0, 0.8]);
        let upper = Mat::from_row_slice(2, 3, &[1.0, 0.65, 0.1, -0.3, 1.4, 1.2]);
        let m = MatrixZonotope::from_intervals(&lower, &upper).unwrap();
        let widths: Vec<f64> = m.generators.iter().map(|g| g.abs().max()).collect();
        let expected = [0.2, 0.15, 0.1, 0.1, 0.2, 0.2];
        assert_eq!(widths.len(), 6);
        for (w, e) in widths.iter().zip(expected) {
            assert!((w - e).abs() < 1e-12);
        }
        // row-major placement
        assert!(m.generators[3][(1, 0)] > 0.0);

        assert!(MatrixZonotope::from_intervals(&Mat::zeros(1, 2), &Mat::zeros(2, 1)).is_err());
    }

    #[test]
    fn right_mul_identity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_cmz(&mut rng, 2, 3, 4, 1);
        assert_eq!(m.right_mul(&Mat::identity(3, 3)).unwrap(), m);
        let z = m.right_mul(&Mat::zeros(3, 2)).unwrap();
        assert!(z.generators.iter().all(|g| g.iter().all(|&v| v == 0.0)));
        assert_eq!(z.a, m.a);
        assert!(z.contains_matrix(&Mat::zeros(2, 2), MEMBERSHIP_TOL).unwrap().is_some());
        assert!(m.right_mul(&Mat::zeros(2, 2)).is_err());
    }

    #[test]
    fn right_mul_sampled_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_cmz(&mut rng, 2, 3, 5, 2);
        let n = rand_mat(&mut rng, 3, 2);
        let v = Vector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let mapped = m.right_mul(&n).unwrap();
        let mapped_vec = m.right_mul_vec(&v).unwrap();
        let mut sampler = FactorSampler::new(&m.a, &m.b).unwrap();
        for _ in 0..300 {
            let zeta = sampler.sample(&mut rng);
            let x = m.point_from_factors(&zeta);
            assert!(mapped.contains_matrix(&(&x * &n), MEMBERSHIP_TOL).unwrap().is_some());
            assert!(mapped_vec.contains_point(&(&x * &v), MEMBERSHIP_TOL).unwrap().is_some());
            // same factors reproduce the image exactly
            assert!((mapped.point_from_factors(&zeta) - &x * &n).abs().max() < 1e-12);
        }
    }

    #[test]
    fn concat_scalar_and_single() {
        let z: ConstrainedZonotope = Zonotope::new(Vector::zeros(1), Mat::from_element(1, 1, 1.0)).unwrap().into();
        let m = concat_t(&z, 2).unwrap();
        assert_eq!(m.generators, vec![Mat::from_row_slice(1, 2, &[1.0, 0.0]), Mat::from_row_slice(1, 2, &[0.0, 1.0])]);
        assert_eq!(m.center, Mat::zeros(1, 2));

        let z = ConstrainedZonotope::new(
            Vector::from_column_slice(&[1.0, 2.0]),
            Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_column_slice(&[0.2]),
        )
        .unwrap();
        let m = concat_t(&z, 1).unwrap();
        assert_eq!(m.generators[0].column(0), z.generators.column(0));
        assert_eq!(m.generators[1].column(0), z.generators.column(1));
        assert_eq!(m.center.column(0), z.center.column(0));
        assert_eq!(m.a, z.a);
        assert!(concat_t(&z, 0).is_err());
    }

    #[test]
    fn concat_members_have_member_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z = ConstrainedZonotope::new(
            Vector::from_column_slice(&[0.3, -0.2]),
            rand_mat(&mut rng, 2, 3),
            Mat::from_row_slice(1, 3, &[1.0, -1.0, 0.5]),
            Vector::from_column_slice(&[0.25]),
        )
        .unwrap();
        let t = 4;
        let m = concat_t(&z, t).unwrap();
        assert_eq!(m.num_generators(), t * 3);
        let mut sampler = FactorSampler::new(&m.a, &m.b).unwrap();
        for _ in 0..1000 {
            let w = m.point_from_factors(&sampler.sample(&mut rng));
            for col in 0..t {
                let x = w.column(col).into_owned();
                assert!(z.contains_point(&x, MEMBERSHIP_TOL).unwrap().is_some());
            }
        }
    }

    #[test]
    fn intersect_singletons() {
        let c = Mat::from_row_slice(1, 2, &[1.0, 2.0]);
        let p = ConstrainedMatrixZonotope::point(c.clone());
        let both = intersect_cmz(&p, &p).unwrap();
        assert!(both.contains_matrix(&c, MEMBERSHIP_TOL).unwrap().is_some());

        let q = ConstrainedMatrixZonotope::point(Mat::from_row_slice(1, 2, &[0.0, 2.0]));
        let none = intersect_cmz(&p, &q).unwrap();
        assert!(none.contains_matrix(&c, MEMBERSHIP_TOL).unwrap().is_none());
        assert!(none.contains_matrix(&Mat::from_row_slice(1, 2, &[0.0, 2.0]), MEMBERSHIP_TOL).unwrap().is_none());
    }

    #[test]
    fn intersect_double_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m2 = random_cmz(&mut rng, 2, 2, 4, 1);
        let shifted = m2.point_from_factors(&Vector::from_element(4, 0.0)) + Mat::from_element(2, 2, 0.3);
        let m1: ConstrainedMatrixZonotope =
            MatrixZonotope::new(shifted, (0..4).map(|_| rand_mat(&mut rng, 2, 2)).collect()).unwrap().into();
        let both = intersect_cmz(&m1, &m2).unwrap();
        let mut sampler = FactorSampler::new(&m2.a, &m2.b).unwrap();
        let mut agree = 0;
        for k in 0..300 {
            // alternate members of m2 and unrelated matrices
            let x = if k % 2 == 0 {
                m2.point_from_factors(&sampler.sample(&mut rng))
            } else {
                rand_mat(&mut rng, 2, 2) * 2.0
            };
            let in1 = m1.contains_matrix(&x, MEMBERSHIP_TOL).unwrap().is_some();
            let in2 = m2.contains_matrix(&x, MEMBERSHIP_TOL).unwrap().is_some();
            let inb = both.contains_matrix(&x, MEMBERSHIP_TOL).unwrap().is_some();
            assert_eq!(in1 && in2, inb, "X = {x}");
            agree += usize::from(inb);
        }
        assert!(agree > 0, "no sampled point fell in the intersection");
    }

    #[test]
    fn product_of_singletons() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let x = Vector::from_column_slice(&[1.0, -1.0]);
        let r = cmz_times_cz(&ConstrainedMatrixZonotope::point(a.clone()), &ConstrainedZonotope::point(x.clone())).unwrap();
        assert_eq!(r.num_generators(), 0);
        assert_eq!(r.center, &a * &x);
    }

    #[test]
    fn product_with_identity_contains_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let c = ConstrainedZonotope::new(
            Vector::from_column_slice(&[0.5, 0.0]),
            rand_mat(&mut rng, 2, 3),
            Mat::from_row_slice(1, 3, &[1.0, 0.0, 1.0]),
            Vector::from_column_slice(&[0.1]),
        )
        .unwrap();
        let r = cmz_times_cz(&ConstrainedMatrixZonotope::point(Mat::identity(2, 2)), &c).unwrap();
        let mut sampler = FactorSampler::new(&c.a, &c.b).unwrap();
        for _ in 0..200 {
            let x = c.point_from_factors(&sampler.sample(&mut rng));
            assert!(r.contains_point(&x, MEMBERSHIP_TOL).unwrap().is_some());
        }
    }

    #[test]
    fn product_soundness() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = random_cmz(&mut rng, 2, 2, 3, 1);
        let c = ConstrainedZonotope::new(
            Vector::from_column_slice(&[0.5, -0.5]),
            rand_mat(&mut rng, 2, 2),
            Mat::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_column_slice(&[0.2]),
        )
        .unwrap();
        let r = cmz_times_cz(&m, &c).unwrap();
        let mut sm = FactorSampler::new(&m.a, &m.b).unwrap();
        let mut sc = FactorSampler::new(&c.a, &c.b).unwrap();
        for _ in 0..1000 {
            let x_mat = m.point_from_factors(&sm.sample(&mut rng));
            let x = c.point_from_factors(&sc.sample(&mut rng));
            assert!(r.contains_point(&(x_mat * x), MEMBERSHIP_TOL).unwrap().is_some());
        }
    }
}
