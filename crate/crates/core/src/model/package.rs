use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::LanguageId;

/// Fixed name of the manifest at the archive root.
pub const MANIFEST_FILE: &str = "refaas.manifest.json";

const S_IFMT: u32 = 0o170000;
const S_IFLNK: u32 = 0o120000;

#[derive(Debug, Error)]
pub enum PackageError {
    #[error("malformed archive: {0}")]
    MalformedArchive(String),
    #[error("archive has no `{MANIFEST_FILE}` at its root")]
    MissingManifest,
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("path escapes the package root: `{0}`")]
    PathTraversal(String),
    #[error("invalid package path `{0}`")]
    InvalidPath(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("entrypoint `{0}` is not part of the package")]
    MissingEntrypoint(String),
    #[error("package has no files")]
    EmptyPackage,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Build/runtime manifest stored as `refaas.manifest.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub language: LanguageId,
    pub entrypoint: String,
    #[serde(default)]
    pub build_config: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(language: LanguageId, entrypoint: impl Into<String>) -> Self {
        Self {
            language,
            entrypoint: entrypoint.into(),
            build_config: BTreeMap::new(),
        }
    }
}

/// Function source tree plus manifest; the unit that flows in and out of the
/// translation service.
///
/// `files` never contains the manifest itself; it is synthesized on
/// serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentPackage {
    pub manifest: Manifest,
    pub files: BTreeMap<String, Vec<u8>>,
}

impl DeploymentPackage {
    pub fn new(manifest: Manifest, files: BTreeMap<String, Vec<u8>>) -> Result<Self, PackageError> {
        let pkg = Self { manifest, files };
        pkg.validate()?;
        Ok(pkg)
    }

    /// Checks every structural invariant. Language membership is checked by
    /// the parser, which knows the registered language set.
    pub fn validate(&self) -> Result<(), PackageError> {
        if self.files.is_empty() {
            return Err(PackageError::EmptyPackage);
        }
        for path in self.files.keys() {
            check_relative_path(path)?;
            if path == MANIFEST_FILE {
                return Err(PackageError::InvalidPath(path.clone()));
            }
        }
        check_relative_path(&self.manifest.entrypoint)?;
        if !self.files.contains_key(&self.manifest.entrypoint) {
            return Err(PackageError::MissingEntrypoint(
                self.manifest.entrypoint.clone(),
            ));
        }
        Ok(())
    }

    pub fn language(&self) -> &LanguageId {
        &self.manifest.language
    }

    /// Entrypoint contents as UTF-8, if they are valid UTF-8.
    pub fn entrypoint_source(&self) -> Option<&str> {
        self.files
            .get(&self.manifest.entrypoint)
            .and_then(|b| std::str::from_utf8(b).ok())
    }

    /// Reads a package from an unpacked directory holding a manifest.
    pub fn from_dir(dir: &Path) -> Result<Self, PackageError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(PackageError::MissingManifest);
        }
        let manifest = parse_manifest(&fs::read(&manifest_path)?)?;
        let mut files = BTreeMap::new();
        collect_dir(dir, dir, &mut files)?;
        files.remove(MANIFEST_FILE);
        Self::new(manifest, files)
    }

    /// Writes the source tree and manifest below `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), PackageError> {
        self.validate()?;
        fs::create_dir_all(dir)?;
        for (path, bytes) in &self.files {
            let target = dir.join(path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(target, bytes)?;
        }
        fs::write(dir.join(MANIFEST_FILE), manifest_bytes(&self.manifest))?;
        Ok(())
    }
}

fn collect_dir(
    root: &Path,
    dir: &Path,
    out: &mut BTreeMap<String, Vec<u8>>,
) -> Result<(), PackageError> {
    let mut entries = fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        let kind = entry.file_type()?;
        if kind.is_dir() {
            if entry.file_name() == "__pycache__" {
                continue;
            }
            collect_dir(root, &path, out)?;
        } else if kind.is_file() {
            let rel = path
                .strip_prefix(root)
                .map_err(|_| PackageError::InvalidPath(path.display().to_string()))?;
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.insert(rel, fs::read(&path)?);
        }
    }
    Ok(())
}

/// Validates a package-relative path: `/`-separated, no empty, `.` or `..`
/// components, no absolute or drive-prefixed paths, no backslashes.
pub fn check_relative_path(path: &str) -> Result<(), PackageError> {
    if path.starts_with('/') || path.starts_with('\\') || has_drive_prefix(path) {
        return Err(PackageError::PathTraversal(path.to_string()));
    }
    if path.split(['/', '\\']).any(|c| c == "..") {
        return Err(PackageError::PathTraversal(path.to_string()));
    }
    if path.is_empty()
        || path.contains('\\')
        || path.contains('\0')
        || path.split('/').any(|c| c.is_empty() || c == ".")
    {
        return Err(PackageError::InvalidPath(path.to_string()));
    }
    Ok(())
}

fn has_drive_prefix(path: &str) -> bool {
    let b = path.as_bytes();
    b.len() >= 2 && b[0].is_ascii_alphabetic() && b[1] == b':'
}

fn parse_manifest(bytes: &[u8]) -> Result<Manifest, PackageError> {
    serde_json::from_slice(bytes).map_err(|e| PackageError::InvalidManifest(e.to_string()))
}

fn manifest_bytes(manifest: &Manifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    out.push(b'\n');
    out
}

/// Parses a zip deployment archive, accepting only the bundled languages.
pub fn parse_package(archive: &[u8]) -> Result<DeploymentPackage, PackageError> {
    parse_package_with(archive, &LanguageId::builtin())
}

/// Parses a zip deployment archive, accepting languages in `languages`.
pub fn parse_package_with(
    archive: &[u8],
    languages: &[LanguageId],
) -> Result<DeploymentPackage, PackageError> {
    let mut zip = ZipArchive::new(Cursor::new(archive))
        .map_err(|e| PackageError::MalformedArchive(e.to_string()))?;
    let mut manifest = None;
    let mut files = BTreeMap::new();
    for i in 0..zip.len() {
        let mut entry = zip
            .by_index(i)
            .map_err(|e| PackageError::MalformedArchive(e.to_string()))?;
        let name = entry.name().to_string();
        if entry.is_dir() {
            check_relative_path(name.trim_end_matches('/'))?;
            continue;
        }
        check_relative_path(&name)?;
        if entry
            .unix_mode()
            .is_some_and(|mode| mode & S_IFMT == S_IFLNK)
        {
            return Err(PackageError::InvalidPath(name));
        }
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut bytes)
            .map_err(|e| PackageError::MalformedArchive(format!("{name}: {e}")))?;
        if name == MANIFEST_FILE {
            manifest = Some(parse_manifest(&bytes)?);
        } else if files.insert(name.clone(), bytes).is_some() {
            return Err(PackageError::MalformedArchive(format!(
                "duplicate entry `{name}`"
            )));
        }
    }
    let manifest = manifest.ok_or(PackageError::MissingManifest)?;
    if !languages.contains(&manifest.language) {
        return Err(PackageError::UnknownLanguage(manifest.language.to_string()));
    }
    DeploymentPackage::new(manifest, files)
}

/// Serializes a package into a deterministic zip archive: manifest first, then
/// files in path order, fixed timestamps and permissions.
pub fn serialize_package(pkg: &DeploymentPackage) -> Result<Vec<u8>, PackageError> {
    pkg.validate()?;
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let zip_err = |e: zip::result::ZipError| PackageError::Io(io::Error::other(e));
    zip.start_file(MANIFEST_FILE, options).map_err(zip_err)?;
    zip.write_all(&manifest_bytes(&pkg.manifest))?;
    for (path, bytes) in &pkg.files {
        zip.start_file(path.as_str(), options).map_err(zip_err)?;
        zip.write_all(bytes)?;
    }
    Ok(zip.finish().map_err(zip_err)?.into_inner())
}
