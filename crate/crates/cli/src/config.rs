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

//! Versioned experiment configuration.
//!
//! The true system is only read by `generate` and by the audits. Synthesis
//! goes through [`Knowledge`], which has no access to it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zonosafe::closedloop::PriorKnowledge;
use zonosafe::datagen::{DataView, LinearSystem};
use zonosafe::numerics::{serde_rows, serde_vector};
use zonosafe::setops::{ConstrainedMatrixZonotope, ConstrainedZonotope, MatrixZonotope, Polytope, Zonotope};
use zonosafe::synthesis::{BoundMode, Method, SafeSet, SynthesisSpec, BISECTION_TOL};
use zonosafe::{benchmark, Mat, Vector};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable naming the output directory when the config has none.
pub const OUT_ENV: &str = "ZONOSAFE_OUT";
pub const DEFAULT_OUT: &str = "zonosafe-out";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SystemConfig,
    pub data: DataConfig,
    pub prior: PriorConfig,
    pub disturbance: DisturbanceConfig,
    pub safe_set: SafeSet,
    pub synthesis: SynthesisConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(rename = "A_true", with = "serde_rows")]
    pub a_true: Mat,
    #[serde(rename = "B_true", with = "serde_rows")]
    pub b_true: Mat,
    #[serde(with = "serde_vector")]
    pub x0: Vector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(rename = "T")]
    pub t: usize,
    pub u_range: f64,
    pub seed: u64,
}

/// Interval bounds on `[A B]`, or no model knowledge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Interval {
        #[serde(with = "serde_rows")]
        lower: Mat,
        #[serde(with = "serde_rows")]
        upper: Mat,
    },
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceConfig {
    /// `[-b, b]ⁿ`.
    Box { b: f64 },
    Czonotope { set: ConstrainedZonotope },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Must agree with the safe-set representation when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    pub lambda: f64,
    #[serde(default)]
    pub bound_mode: BoundMode,
    #[serde(default = "yes")]
    pub use_prior: bool,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub lambda: Vec<f64>,
    pub b: Vec<f64>,
    /// Bisection tolerance for the frontier values.
    pub tol: f64,
    /// Upper end of the disturbance bisection.
    pub b_max: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambda: vec![0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.98],
            b: vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08],
            tol: BISECTION_TOL,
            b_max: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub samples: usize,
    pub ris_horizon: usize,
    pub ris_runs: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { samples: 10_000, ris_horizon: 50, ris_runs: 100 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

/// What the synthesizer may see.
pub struct Knowledge<'a> {
    pub prior: &'a PriorConfig,
    pub disturbance: &'a DisturbanceConfig,
    pub safe_set: &'a SafeSet,
    pub synthesis: &'a SynthesisConfig,
}

impl Knowledge<'_> {
    pub fn spec(&self, data: DataView) -> CliResult<SynthesisSpec> {
        let zw = self.disturbance.set(data.state_dim())?;
        let prior = match self.prior.model()? {
            Some(m) => PriorKnowledge::new(m, zw)?,
            None => PriorKnowledge::without_model(zw),
        };
        let spec = SynthesisSpec::new(data, prior, self.safe_set.clone(), self.synthesis.lambda)?;
        Ok(spec.with_bound_mode(self.synthesis.bound_mode).with_prior(self.synthesis.use_prior))
    }
}

impl PriorConfig {
    pub fn model(&self) -> CliResult<Option<ConstrainedMatrixZonotope>> {
        match self {
            PriorConfig::Interval { lower, upper } => Ok(Some(MatrixZonotope::from_intervals(lower, upper)?.into())),
            PriorConfig::None => Ok(None),
        }
    }
}

impl DisturbanceConfig {
    pub fn set(&self, n: usize) -> CliResult<ConstrainedZonotope> {
        match self {
            DisturbanceConfig::Box { b } => Ok(Zonotope::symmetric_box(n, *b)?.into()),
            DisturbanceConfig::Czonotope { set } => Ok(set.clone()),
        }
    }
}

impl ExperimentConfig {
    /// The worked example: the two-state benchmark with interval prior and
    /// the unit box `[I; −I]x ≤ 1` as safe set.
    ///
    /// The unit box cannot be made λ-contractive for this system: the first
    /// row of `A + BK` is independent of `K` and maps the corner `(1, 1)` to
    /// 1.3. Synthesis on this config therefore reports infeasible; replace
    /// `safe_set` to obtain controllers.
    pub fn example() -> Self {
        let sys = benchmark::system();
        Self {
            version: CONFIG_VERSION,
            description: Some(
                "two-state benchmark; the unit-box safe set admits no contractive gain for this system, \
                 replace safe_set to obtain controllers"
                    .into(),
            ),
            system: SystemConfig { a_true: sys.a().clone(), b_true: sys.b().clone(), x0: benchmark::initial_state() },
            data: DataConfig { t: benchmark::SAMPLES, u_range: 1.0, seed: 1 },
            prior: PriorConfig::Interval { lower: benchmark::prior_lower(), upper: benchmark::prior_upper() },
            disturbance: DisturbanceConfig::Box { b: 0.03 },
            safe_set: SafeSet::Polytope(Polytope::unit_box(2)),
            synthesis: SynthesisConfig {
                method: Some(Method::Polytope),
                lambda: 0.95,
                bound_mode: BoundMode::Sound,
                use_prior: true,
                sweep: SweepConfig::default(),
            },
            audit: AuditConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parses and validates, naming the offending field on schema errors.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.version != CONFIG_VERSION {
            return config_err(format!("version: unsupported config version {}, expected {CONFIG_VERSION}", self.version));
        }
        let (a, b) = (&self.system.a_true, &self.system.b_true);
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return config_err(format!("system.A_true: must be square and non-empty, got {:?}", a.shape()));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return config_err(format!("system.B_true: expected {n} rows and at least one column, got {:?}", b.shape()));
        }
        let m = b.ncols();
        if self.system.x0.len() != n {
            return config_err(format!("system.x0: expected length {n}, got {}", self.system.x0.len()));
        }
        if self.data.t < n + 1 {
            return config_err(format!("data.T: need at least n+1 = {} samples, got {}", n + 1, self.data.t));
        }
        if !(self.data.u_range > 0.0 && self.data.u_range.is_finite()) {
            return config_err(format!("data.u_range: must be positive and finite, got {}", self.data.u_range));
        }
        if let PriorConfig::Interval { lower, upper } = &self.prior {
            for (name, bound) in [("lower", lower), ("upper", upper)] {
                if bound.shape() != (n, n + m) {
                    return config_err(format!("prior.{name}: expected {n}x{} bounds on [A B], got {:?}", n + m, bound.shape()));
                }
            }
            if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
                return config_err("prior: lower bound exceeds upper bound");
            }
        }
        match &self.disturbance {
            DisturbanceConfig::Box { b } if !(*b >= 0.0 && b.is_finite()) => {
                return config_err(format!("disturbance.b: must be nonnegative and finite, got {b}"));
            }
            DisturbanceConfig::Czonotope { set } if set.dim() != n => {
                return config_err(format!("disturbance.set: set in R^{} for n={n}", set.dim()));
            }
            _ => {}
        }
        if self.safe_set.dim() != n {
            return config_err(format!("safe_set: set in R^{} for n={n}", self.safe_set.dim()));
        }
        let kind = match self.safe_set {
            SafeSet::Polytope(_) => Method::Polytope,
            SafeSet::Czonotope(_) => Method::Czonotope,
        };
        if self.synthesis.method.is_some_and(|m| m != kind) {
            return config_err(format!("synthesis.method: {:?} does not match the safe-set kind {kind:?}", self.synthesis.method.unwrap()));
        }
        check_lambda("synthesis.lambda", self.synthesis.lambda)?;
        let sweep = &self.synthesis.sweep;
        for &l in &sweep.lambda {
            check_lambda("synthesis.sweep.lambda", l)?;
        }
        if sweep.b.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return config_err("synthesis.sweep.b: levels must be nonnegative and finite");
        }
        if !(sweep.tol > 0.0) {
            return config_err(format!("synthesis.sweep.tol: must be positive, got {}", sweep.tol));
        }
        if !(sweep.b_max >= 0.0 && sweep.b_max.is_finite()) {
            return config_err(format!("synthesis.sweep.b_max: must be nonnegative and finite, got {}", sweep.b_max));
        }
        Ok(())
    }

    pub fn true_system(&self) -> CliResult<LinearSystem> {
        Ok(LinearSystem::new(self.system.a_true.clone(), self.system.b_true.clone())?)
    }

    pub fn knowledge(&self) -> Knowledge<'_> {
        Knowledge { prior: &self.prior, disturbance: &self.disturbance, safe_set: &self.safe_set, synthesis: &self.synthesis }
    }

    pub fn state_dim(&self) -> usize {
        self.system.a_true.nrows()
    }

    /// `override_dir`, else the config entry, else `$ZONOSAFE_OUT`, else
    /// `zonosafe-out` in the working directory.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        if let Some(d) = &self.output.directory {
            return d.clone();
        }
        match std::env::var_os(OUT_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => PathBuf::from(DEFAULT_OUT),
        }
    }
}

fn check_lambda(field: &str, l: f64) -> CliResult<()> {
    if l > 0.0 && l < 1.0 {
        Ok(())
    } else {
        config_err(format!("{field}: contraction factor must lie in (0, 1), got {l}"))
    }
}
