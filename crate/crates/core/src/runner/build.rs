use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::adapter::{expand, LanguageRegistry, SuccessPredicate};
use super::{process, RunnerError};
use crate::model::{DeploymentPackage, LanguageId};

/// A built function ready to be invoked: a directory plus the command that
/// starts one invocation inside it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub language: LanguageId,
    pub root: PathBuf,
    pub command: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

impl Artifact {
    /// An artifact run directly from `root` with an explicit command.
    pub fn new(language: LanguageId, root: impl Into<PathBuf>, command: Vec<String>) -> Self {
        Self {
            language,
            root: root.into(),
            command,
            env: BTreeMap::new(),
        }
    }

    pub(crate) fn program(&self) -> PathBuf {
        let program = &self.command[0];
        match program.strip_prefix("./") {
            Some(rest) => self.root.join(rest),
            None => PathBuf::from(program),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildResult {
    pub ok: bool,
    pub artifact: Option<Artifact>,
    /// Toolchain diagnostics, verbatim.
    pub stderr: String,
    /// Seconds.
    pub duration: f64,
}

impl BuildResult {
    fn failed(stderr: String, started: Instant) -> Self {
        Self {
            ok: false,
            artifact: None,
            stderr,
            duration: started.elapsed().as_secs_f64(),
        }
    }
}

pub trait Builder: Send + Sync {
    /// Builds `pkg` inside `workdir`, which must be empty or absent.
    /// A compile failure is `Ok` with `ok == false`.
    fn build(&self, pkg: &DeploymentPackage, workdir: &Path) -> Result<BuildResult, RunnerError>;
}

/// Builder driven by the adapter profiles in a [`LanguageRegistry`].
#[derive(Debug, Clone)]
pub struct Toolchain {
    registry: Arc<LanguageRegistry>,
}

impl Toolchain {
    pub fn new(registry: Arc<LanguageRegistry>) -> Self {
        Self { registry }
    }

    pub fn registry(&self) -> &LanguageRegistry {
        &self.registry
    }
}

fn prepare_sandbox(workdir: &Path) -> Result<(), RunnerError> {
    fs::create_dir_all(workdir)?;
    if fs::read_dir(workdir)?.next().is_some() {
        return Err(RunnerError::SandboxNotEmpty(workdir.display().to_string()));
    }
    Ok(())
}

impl Builder for Toolchain {
    fn build(&self, pkg: &DeploymentPackage, workdir: &Path) -> Result<BuildResult, RunnerError> {
        let profile = self.registry.get(pkg.language())?;
        prepare_sandbox(workdir)?;
        let started = Instant::now();
        pkg.write_to_dir(workdir)?;
        let entrypoint = pkg.manifest.entrypoint.as_str();
        let budget = Duration::from_secs(profile.build.timeout_secs);

        for step in &profile.build.steps {
            let Some((program, args)) = step.split_first() else {
                continue;
            };
            let remaining = budget.saturating_sub(started.elapsed());
            let mut cmd = Command::new(expand(program, entrypoint));
            cmd.args(args.iter().map(|a| expand(a, entrypoint)))
                .current_dir(workdir)
                .envs(&profile.build.env);
            let out = process::run(&mut cmd, b"", remaining, |_| {})?;
            let Some(exit) = out.exit else {
                return Err(RunnerError::Timeout(budget));
            };
            let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
            let quiet_violation = profile.build.success == SuccessPredicate::ExitZeroQuiet
                && !stderr.trim().is_empty();
            if !exit.success() || quiet_violation {
                let mut report = stderr;
                if report.trim().is_empty() {
                    report = String::from_utf8_lossy(&out.stdout).into_owned();
                }
                if report.trim().is_empty() {
                    report = format!("`{}` failed: {exit}", step.join(" "));
                }
                return Ok(BuildResult::failed(report, started));
            }
        }

        let missing: Vec<String> = profile
            .artifact
            .required
            .iter()
            .map(|r| expand(r, entrypoint))
            .filter(|r| !workdir.join(r).exists())
            .collect();
        if !missing.is_empty() {
            return Ok(BuildResult::failed(
                format!("build produced no {}", missing.join(", ")),
                started,
            ));
        }

        let artifact = Artifact {
            language: pkg.language().clone(),
            root: workdir.to_path_buf(),
            command: profile
                .run
                .command
                .iter()
                .map(|a| expand(a, entrypoint))
                .collect(),
            env: profile.run.env.clone(),
        };
        Ok(BuildResult {
            ok: true,
            artifact: Some(artifact),
            stderr: String::new(),
            duration: started.elapsed().as_secs_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Manifest;

    fn python(source: &str) -> DeploymentPackage {
        let files = BTreeMap::from([("handler.py".to_string(), source.as_bytes().to_vec())]);
        DeploymentPackage::new(Manifest::new(LanguageId::python(), "handler.py"), files).unwrap()
    }

    fn toolchain() -> Toolchain {
        Toolchain::new(Arc::new(LanguageRegistry::builtin()))
    }

    #[test]
    fn python_build_is_a_syntax_check() {
        let dir = tempfile::tempdir().unwrap();
        let ok = toolchain()
            .build(&python("print(1)\n"), &dir.path().join("a"))
            .unwrap();
        assert!(ok.ok);
        let artifact = ok.artifact.unwrap();
        assert_eq!(artifact.command, vec!["python3", "handler.py"]);

        let bad = toolchain()
            .build(&python("def f(:\n"), &dir.path().join("b"))
            .unwrap();
        assert!(!bad.ok);
        assert!(bad.artifact.is_none());
        assert!(bad.stderr.contains("SyntaxError"), "{}", bad.stderr);
    }

    fn go(source: &str) -> DeploymentPackage {
        LanguageRegistry::builtin()
            .get(&LanguageId::go())
            .unwrap()
            .scaffold(source)
            .unwrap()
    }

    #[test]
    fn go_build_and_compile_error() {
        let dir = tempfile::tempdir().unwrap();
        let hello = "package main\n\nimport \"fmt\"\n\nfunc main() { fmt.Println(`{\"hello\":\"world\"}`) }";
        let ok = toolchain()
            .build(&go(hello), &dir.path().join("ok"))
            .unwrap();
        assert!(ok.ok, "{}", ok.stderr);
        assert!(dir.path().join("ok/function").is_file());

        let broken = "package main\n\nfunc main() { var x int = \"s\"; _ = x }";
        let bad = toolchain()
            .build(&go(broken), &dir.path().join("bad"))
            .unwrap();
        assert!(!bad.ok);
        assert!(bad.stderr.contains("cannot use"), "{}", bad.stderr);
    }

    #[test]
    fn sandbox_must_be_empty() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x"), "").unwrap();
        assert!(matches!(
            toolchain().build(&python("pass\n"), dir.path()),
            Err(RunnerError::SandboxNotEmpty(_))
        ));
    }

    #[test]
    fn unknown_language_has_no_adapter() {
        let files = BTreeMap::from([("main.rs".to_string(), b"fn main(){}".to_vec())]);
        let pkg = DeploymentPackage::new(Manifest::new(LanguageId::new("rust"), "main.rs"), files)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            toolchain().build(&pkg, dir.path()),
            Err(RunnerError::AdapterMissing(_))
        ));
    }

    #[test]
    fn dot_slash_resolves_against_root() {
        let a = Artifact::new(LanguageId::go(), "/srv/fn", vec!["./function".into()]);
        assert_eq!(a.program(), PathBuf::from("/srv/fn/function"));
        let b = Artifact::new(LanguageId::python(), "/srv/fn", vec!["python3".into()]);
        assert_eq!(b.program(), PathBuf::from("python3"));
    }
}
