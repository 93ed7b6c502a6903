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

//! The two-state benchmark used throughout tests, examples and the CLI
//! defaults.

use crate::datagen::LinearSystem;
use crate::error::Result;
use crate::numerics::{Mat, Vector};
use crate::setops::{ConstrainedMatrixZonotope, ConstrainedZonotope, MatrixZonotope, Zonotope};

/// `A = [0.8 0.5; -0.4 1.2]`, `B = [0; 1]`.
pub fn system() -> LinearSystem {
    LinearSystem::new(Mat::from_row_slice(2, 2, &[0.8, 0.5, -0.4, 1.2]), Mat::from_row_slice(2, 1, &[0.0, 1.0]))
        .expect("benchmark matrices are consistent")
}

/// Entrywise lower bounds on `[A B]`.
pub fn prior_lower() -> Mat {
    Mat::from_row_slice(2, 3, &[0.6, 0.35, -0.1, -0.5, 1.0, 0.8])
}

/// Entrywise upper bounds on `[A B]`.
pub fn prior_upper() -> Mat {
    Mat::from_row_slice(2, 3, &[1.0, 0.65, 0.1, -0.3, 1.4, 1.2])
}

/// The interval prior on `[A B]` as a matrix zonotope with six generators.
pub fn prior() -> ConstrainedMatrixZonotope {
    MatrixZonotope::from_intervals(&prior_lower(), &prior_upper()).expect("bounds are ordered").into()
}

/// `[-b, b]²`.
pub fn disturbance(b: f64) -> Result<ConstrainedZonotope> {
    Ok(Zonotope::symmetric_box(2, b)?.into())
}

/// Default initial state for experiments.
pub fn initial_state() -> Vector {
    Vector::from_column_slice(&[0.5, -0.5])
}

/// Default experiment length.
pub const SAMPLES: usize = 10;
