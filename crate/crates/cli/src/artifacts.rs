use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::find_non_finite;
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the artifact root, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let p = root.join(MANIFEST);
        let text = fs::read_to_string(&p).map_err(CliError::io(&p))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: p, source })
    }

    /// Paths whose current content no longer matches the manifest.
    pub fn mismatches(&self, root: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|e| match fs::read(root.join(&e.path)) {
                Ok(b) => sha256_hex(&b) != e.sha256 || b.len() as u64 != e.bytes,
                Err(_) => true,
            })
            .map(|e| e.path.clone())
            .collect()
    }
}

/// The one place artifact files are written; every write is hashed into
/// the manifest, which `finish` writes last.
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(ArtifactWriter {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn record(&mut self, rel: &str, bytes: &[u8]) {
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        fs::write(&p, bytes).map_err(CliError::io(&p))?;
        self.record(rel, bytes);
        Ok(p)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<PathBuf> {
        self.write_bytes(rel, text.as_bytes())
    }

    /// Pretty JSON, refused when any float in `value` is not finite.
    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<PathBuf> {
        let text = json_text(value, rel)?;
        self.write_text(rel, &text)
    }

    /// Hash files that something else already wrote under the root.
    pub fn adopt(&mut self, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let rel = p
                .strip_prefix(&self.root)
                .map_err(|_| CliError::Validation(format!("{} is outside {}", p.display(), self.root.display())))?;
            let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            let bytes = fs::read(p).map_err(CliError::io(p))?;
            self.record(&rel.join("/"), &bytes);
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let m = Manifest { files: self.entries };
        let p = self.root.join(MANIFEST);
        let text = serde_json::to_string_pretty(&m).map_err(|source| CliError::Json { path: p.clone(), source })?;
        fs::write(&p, text + "\n").map_err(CliError::io(&p))?;
        Ok(m)
    }
}

pub fn json_text<T: Serialize>(value: &T, context: &str) -> Result<String> {
    if let Some(field) = find_non_finite(value) {
        return Err(CliError::NonFinite {
            context: context.to_string(),
            field,
        });
    }
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: PathBuf::from(context),
        source,
    })?;
    Ok(text + "\n")
}

pub fn export_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = json_text(value, &path.display().to_string())?;
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn import_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}
