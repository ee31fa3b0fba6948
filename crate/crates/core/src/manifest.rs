//! Output files, written atomically and listed with their checksums.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write through a temporary file in the same directory and rename, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::io(dir.display().to_string(), e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path.display().to_string(), e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// A verdict as recorded in the manifest; `id` names the cell or check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub timestamp: String,
    pub exit_code: i32,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            exit_code: 0,
            config: config.clone(),
            files: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("manifest_{command}.json")
    }

    /// Write `bytes` to `dir/name` and record it.
    pub fn emit(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        self.files.push(FileEntry {
            path: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn check(&mut self, id: impl Into<String>, verdict: &str) {
        self.checks.push(CheckEntry {
            id: id.into(),
            verdict: verdict.into(),
        });
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(RunManifest::file_name(&self.command));
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Parse a manifest and confirm every listed file still has its
    /// recorded checksum.
    pub fn load_verified(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("corrupt manifest {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for f in &m.files {
            let p = dir.join(&f.path);
            let bytes = std::fs::read(&p)
                .map_err(|e| Error::Config(format!("missing output {}: {e}", p.display())))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(Error::Config(format!(
                    "checksum mismatch for {}",
                    p.display()
                )));
            }
        }
        Ok(m)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| c.verdict != "pass")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::for_models(&["exponential(1)"]);
        let mut m = RunManifest::new("lemmas", &cfg);
        m.emit(dir.path(), "a.csv", b"x,y\n1,2\n").unwrap();
        m.check("L1 exponential(1)", "pass");
        let path = m.write(dir.path()).unwrap();
        assert!(path.ends_with("manifest_lemmas.json"));
        let back = RunManifest::load_verified(&path).unwrap();
        assert_eq!(back, m);

        std::fs::write(dir.path().join("a.csv"), b"x,y\n1,3\n").unwrap();
        let err = RunManifest::load_verified(&path).unwrap_err().to_string();
        assert!(err.contains("a.csv"), "{err}");
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
