//! The bundled program corpus and its manifest of expected outcomes.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

/// Overrides the corpus directory.
pub const CORPUS_ENV: &str = "BFO_CORPUS";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Manifest {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("unsupported manifest version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Safety {
    Safe,
    Unsafe,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ProgramEntry {
    pub name: String,
    pub file: String,
    /// Absent for programs that do not type-check.
    pub safety: Option<Safety>,
    /// `ok` or the name of the expected type error.
    pub check: String,
    #[serde(default)]
    pub consort: bool,
    #[serde(default)]
    pub rusthorn: bool,
    /// Part of the benchmark table.
    #[serde(default)]
    pub benchmark: bool,
    /// Line comments carry the expected type environments.
    pub env_comments: Option<EnvComments>,
    /// Ownership sum the permissive audit must report as a violation.
    pub audit_own: Option<String>,
}

impl ProgramEntry {
    pub fn well_typed(&self) -> bool {
        self.check == "ok"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvComments {
    /// Each comment lists the whole environment after its line.
    Exact,
    /// Each comment lists some of the bindings.
    Partial,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TargetEntry {
    pub name: String,
    pub file: String,
    pub safety: Safety,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TranslationEntry {
    pub source: String,
    pub target: String,
    /// Whether the listing is expected to equal our output after
    /// normalization.
    pub matches: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(default, rename = "program")]
    pub programs: Vec<ProgramEntry>,
    #[serde(default, rename = "target")]
    pub targets: Vec<TargetEntry>,
    #[serde(default, rename = "translation")]
    pub translations: Vec<TranslationEntry>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub manifest: Manifest,
}

/// `$BFO_CORPUS`, or the `corpus/` directory of this source tree.
pub fn default_root() -> PathBuf {
    match std::env::var_os(CORPUS_ENV) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus"),
    }
}

impl Corpus {
    pub fn load() -> Result<Self, CorpusError> {
        Corpus::load_from(default_root())
    }

    pub fn load_from(root: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let root = root.into();
        let path = root.join("manifest.toml");
        let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let manifest: Manifest =
            toml::from_str(&text).map_err(|source| CorpusError::Manifest { path, source })?;
        if manifest.version != 1 {
            return Err(CorpusError::Version(manifest.version));
        }
        Ok(Corpus { root, manifest })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.root.join(file)
    }

    pub fn read(&self, file: &str) -> Result<String, CorpusError> {
        let path = self.path(file);
        std::fs::read_to_string(&path).map_err(|source| CorpusError::Io { path, source })
    }

    pub fn program(&self, name: &str) -> Option<&ProgramEntry> {
        self.manifest.programs.iter().find(|p| p.name == name)
    }
}
