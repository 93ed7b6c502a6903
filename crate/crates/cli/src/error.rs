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

//! Error kinds and their process exit codes.

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 10;
pub const EXIT_AUDIT: i32 = 20;
pub const EXIT_CONFIG: i32 = 30;
pub const EXIT_NUMERICAL: i32 = 40;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Audit(_) => EXIT_AUDIT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<zonosafe::Error> for CliError {
    fn from(e: zonosafe::Error) -> Self {
        use zonosafe::Error as E;
        match e {
            E::Dimension(_) | E::InvalidBounds(_) | E::InvalidArgument(_) | E::Json(_) | E::Io(_) => {
                CliError::Config(e.to_string())
            }
            E::NoRightInverse
            | E::Precondition(_)
            | E::Overflow(_)
            | E::EmptySet(_)
            | E::Informativity(_)
            | E::Lp(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
