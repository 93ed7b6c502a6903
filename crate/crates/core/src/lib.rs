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

//! Safe state-feedback synthesis for uncertain linear systems from
//! trajectory data and prior model knowledge.
//!
//! The set of closed-loop matrices consistent with data, disturbance bounds
//! and a prior model set is represented as a constrained matrix zonotope;
//! λ-contractivity of a safe set is then enforced with linear-programming
//! set-inclusion certificates.

pub mod benchmark;
pub mod closedloop;
pub mod datagen;
pub mod error;
pub mod lp;
pub mod numerics;
pub mod sampling;
pub mod setops;
pub mod synthesis;
pub mod validate;

pub use error::{Error, Result};
pub use numerics::{Mat, Vector};
