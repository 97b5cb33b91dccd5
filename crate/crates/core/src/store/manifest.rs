use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub sha256: String,
    /// Stage that wrote the file.
    pub stage: String,
    pub bytes: u64,
    /// Seconds since the Unix epoch.
    pub recorded_at: u64,
}

/// Record of a run directory: the config used, digests of the raw inputs and
/// a checksum for every artifact written so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
    pub created_at: u64,
    pub updated_at: u64,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

impl RunManifest {
    pub fn new(config: serde_json::Value) -> Self {
        let t = now();
        RunManifest {
            config,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            created_at: t,
            updated_at: t,
        }
    }

    pub fn path(run_dir: &Path) -> PathBuf {
        run_dir.join(MANIFEST_FILE)
    }

    /// Reads the manifest without touching the artifacts it lists.
    pub fn read(run_dir: &Path) -> Result<Self> {
        let path = Self::path(run_dir);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                stage: "preprocess".into(),
            });
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))
    }

    /// Reads the manifest and checks every listed artifact against its checksum.
    pub fn load(run_dir: &Path) -> Result<Self> {
        let m = Self::read(run_dir)?;
        for name in m.artifacts.keys() {
            m.verify(run_dir, name)?;
        }
        Ok(m)
    }

    pub fn save(&self, run_dir: &Path) -> Result<()> {
        fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;
        let path = Self::path(run_dir);
        let tmp = run_dir.join(format!("{MANIFEST_FILE}.tmp"));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Checksums `run_dir/name` and records it as written by `stage`.
    pub fn record(&mut self, run_dir: &Path, name: &str, stage: &str) -> Result<()> {
        let (sha256, bytes) = sha256_file(&run_dir.join(name))?;
        let t = now();
        self.artifacts.insert(
            name.to_string(),
            ArtifactEntry {
                sha256,
                stage: stage.to_string(),
                bytes,
                recorded_at: t,
            },
        );
        self.updated_at = t;
        Ok(())
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let digest = if path.is_dir() {
            let mut hasher = Sha256::new();
            let mut files: Vec<PathBuf> = Vec::new();
            collect_files(path, &mut files)?;
            files.sort();
            for f in files {
                let (d, _) = sha256_file(&f)?;
                let rel = f.strip_prefix(path).unwrap_or(&f);
                hasher.update(rel.to_string_lossy().as_bytes());
                hasher.update(d.as_bytes());
            }
            hex::encode(hasher.finalize())
        } else {
            sha256_file(path)?.0
        };
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Fails if `name` is unlisted, missing on disk, or changed since recorded.
    /// `stage` names what to rerun when the entry is unknown.
    pub fn require(&self, run_dir: &Path, name: &str, stage: &str) -> Result<()> {
        if !self.artifacts.contains_key(name) {
            return Err(Error::MissingArtifact {
                path: run_dir.join(name),
                stage: stage.to_string(),
            });
        }
        self.verify(run_dir, name)
    }

    fn verify(&self, run_dir: &Path, name: &str) -> Result<()> {
        let entry = &self.artifacts[name];
        let path = run_dir.join(name);
        if !path.exists() {
            return Err(Error::MissingArtifact {
                path,
                stage: entry.stage.clone(),
            });
        }
        let (sha, _) = sha256_file(&path)?;
        if sha != entry.sha256 {
            return Err(Error::StaleArtifact {
                path,
                stage: entry.stage.clone(),
            });
        }
        Ok(())
    }

    /// Artifact checksums only, for comparing runs.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.artifacts
            .iter()
            .map(|(k, v)| (k.clone(), v.sha256.clone()))
            .collect()
    }
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}
