use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    fn of(path: &Path) -> std::io::Result<Self> {
        let data = fs::read(path)?;
        let sha256 = Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self {
            path: path.display().to_string(),
            sha256,
            bytes: data.len() as u64,
        })
    }
}

/// Run record written beside an output artifact. It holds no timestamps,
/// so identical runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub summary: Value,
}

/// `<artifact>.manifest.json`, in the artifact's directory.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

impl Manifest {
    pub fn new(command: &'static str, config: &impl Serialize) -> Self {
        Self {
            tool: "medsim",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let d = FileDigest::of(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        self.inputs.push(d);
        Ok(())
    }

    /// Digests `artifact` and writes the manifest beside it.
    pub fn finish(mut self, artifact: &Path, summary: Value) -> Result<PathBuf, CliError> {
        let runtime = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", artifact.display()));
        self.outputs.push(FileDigest::of(artifact).map_err(runtime)?);
        self.summary = summary;
        let path = manifest_path(artifact);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_beside_its_artifact() {
        assert_eq!(
            manifest_path(Path::new("out/pairs.jsonl")),
            PathBuf::from("out/pairs.jsonl.manifest.json")
        );
    }
}
