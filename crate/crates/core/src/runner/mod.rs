//! Builds packages with per-language adapter profiles, runs built functions
//! under the stdin/stdout JSON contract, and judges their outputs.

mod adapter;
mod build;
mod compare;
mod invoke;
mod process;
mod suite;

use std::io;
use std::time::Duration;

use thiserror::Error;

use crate::model::{LanguageId, PackageError};

pub use adapter::{
    AdapterProfile, ArtifactSection, BuildSection, LanguageRegistry, RunSection, ScaffoldSection,
    SuccessPredicate,
};
pub use build::{Artifact, BuildResult, Builder, Toolchain};
pub use compare::{
    compare_json, CompareError, ComparisonVerdict, Mismatch, MismatchKind, DEFAULT_TOLERANCE,
};
pub use invoke::{
    FunctionInvoker, InvocationFailure, InvocationRecord, InvokeLimits, ProcessInvoker,
};
pub use suite::{run_suite, CaseResult, ValidationSummary};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("no adapter profile registered for language `{0}`")]
    AdapterMissing(LanguageId),
    #[error("invalid adapter profile: {0}")]
    InvalidProfile(String),
    #[error("build exceeded its {0:?} timeout")]
    Timeout(Duration),
    #[error("sandbox `{0}` is not empty")]
    SandboxNotEmpty(String),
    #[error(transparent)]
    Package(#[from] PackageError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}
