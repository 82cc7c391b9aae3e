//! Experiment runner: config parsing, seeded multi-trial execution, regret
//! accounting, aggregation, CSV output and the command-line entry point.

mod cli;
mod config;
mod output;
mod run;

pub use cli::cli_main;
pub use config::{
    AlgoSpec, ChangeSpec, CoverKind, DalSpec, EnvSpec, EnvVariant, ExperimentConfig, FamilyKind, NoiseKind, PolicyKind,
    RunMode, ScheduleKind, SquareCbOracleKind,
};
pub use output::{emit_csv, read_csv, write_csv, CsvRow};
pub use run::{build_environment, build_policy, run_experiment, run_trial, trial_cover, AggregateResult, RegretTrace};

use thiserror::Error;

use crate::dal::DalError;
use crate::detect::DetectError;
use crate::envs::EnvError;
use crate::policies::PolicyError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("environment error: {0}")]
    Env(EnvError),
    #[error("trial failed: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(m) => HarnessError::Config(m),
            other => HarnessError::Env(other),
        }
    }
}

impl From<DalError> for HarnessError {
    fn from(e: DalError) -> Self {
        match e {
            DalError::Config(m) => HarnessError::Config(m),
            DalError::Policy(PolicyError::Config(m)) => HarnessError::Config(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        DalError::from(e).into()
    }
}

impl From<DetectError> for HarnessError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Domain(m) => HarnessError::Config(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}
