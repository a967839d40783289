//! Domain values shared by every other module: languages, deployment
//! packages, black-box test suites and job requests.
//!
//! All values here are plain data. They are immutable after construction in
//! practice and are `Send + Sync`, so workers can share them freely.

mod job;
mod language;
mod package;
pub mod pointer;
mod suite;

pub use job::{
    JobSpec, JobSpecError, DEFAULT_BENCHMARK_INVOCATIONS, DEFAULT_BENCHMARK_REPETITIONS,
};
pub use language::LanguageId;
pub use package::{
    check_relative_path, parse_package, parse_package_with, serialize_package, DeploymentPackage,
    Manifest, PackageError, MANIFEST_FILE,
};
pub use suite::{
    load_test_suite_dir, parse_test_archive, parse_test_suite, serialize_test_archive, MatchMode,
    MatchOverride, SuiteError, TestCase, TestSuite,
};
