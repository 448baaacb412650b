use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CliError, RunConfig};

/// Files produced by one run, keyed by the suffix appended to the output prefix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn push(&mut self, suffix: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((suffix.to_string(), bytes.into()));
    }

    pub fn get(&self, suffix: &str) -> Option<&[u8]> {
        self.files.iter().find(|(s, _)| s == suffix).map(|(_, b)| b.as_slice())
    }

    /// Writes every file next to `prefix`, each via a temporary file and a rename.
    pub fn write(&self, prefix: &Path) -> Result<Vec<PathBuf>, CliError> {
        if prefix.as_os_str().is_empty() {
            return Err(CliError::Usage("missing --out prefix".into()));
        }
        if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
            if !dir.is_dir() {
                return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
            }
        }
        let mut written = Vec::new();
        for (suffix, bytes) in &self.files {
            let path = with_suffix(prefix, suffix);
            let tmp = with_suffix(prefix, &format!("{suffix}.partial"));
            fs::write(&tmp, bytes)
                .and_then(|_| fs::rename(&tmp, &path))
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}

pub(crate) fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDigest {
    pub role: String,
    pub fingerprint: String,
}

/// Header shared by every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub models: Vec<ModelDigest>,
}

impl RunMeta {
    pub fn new(cfg: &RunConfig) -> Self {
        let canonical = serde_json::to_vec(cfg).expect("run config serializes");
        Self {
            tool: format!("predsens {}", env!("CARGO_PKG_VERSION")),
            seed: cfg.seed(),
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            config: cfg.clone(),
            inputs: Vec::new(),
            models: Vec::new(),
        }
    }

    /// Reads `path`, records its digest, and returns its contents.
    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            role: role.into(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(bytes)
    }

    pub fn read_text(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        String::from_utf8(self.read_input(role, path)?)
            .map_err(|_| CliError::Data(format!("{} is not UTF-8", path.display())))
    }

    pub fn add_model(&mut self, role: &str, fingerprint: String) {
        self.models.push(ModelDigest { role: role.into(), fingerprint });
    }

    /// Header lines of the text report.
    pub fn text_header(&self, title: &str) -> String {
        let mut out = format!("{title}\n{}\nseed\t{}\nconfig sha256\t{}\n", self.tool, self.seed, self.config_sha256);
        for i in &self.inputs {
            out.push_str(&format!("input {}\t{}\t{}\n", i.role, i.path, i.sha256));
        }
        for m in &self.models {
            out.push_str(&format!("model {}\t{}\n", m.role, m.fingerprint));
        }
        out
    }
}

/// Pretty JSON with a trailing newline.
pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub(crate) fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_f)
}

/// Re-runs the configuration embedded in `report` and compares every output
/// file byte for byte. Returns the number of files checked.
pub fn verify(report: &Path) -> Result<usize, CliError> {
    let text = fs::read_to_string(report)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", report.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", report.display())))?;
    let meta: RunMeta = serde_json::from_value(value.get("meta").cloned().unwrap_or_default())
        .map_err(|e| CliError::Data(format!("{}: no run metadata: {e}", report.display())))?;
    let name = report.to_string_lossy();
    let prefix = PathBuf::from(
        name.strip_suffix(".json")
            .ok_or_else(|| CliError::Usage(format!("{} is not a .json report", report.display())))?,
    );

    for input in &meta.inputs {
        let bytes = fs::read(&input.path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", input.path)))?;
        if hex::encode(Sha256::digest(&bytes)) != input.sha256 {
            return Err(CliError::Data(format!("input {} ({}) changed since the report was written", input.role, input.path)));
        }
    }

    let outputs = meta.config.execute()?;
    let mut mismatched = Vec::new();
    for (suffix, bytes) in &outputs.files {
        let path = with_suffix(&prefix, suffix);
        match fs::read(&path) {
            Ok(existing) if existing == *bytes => {}
            Ok(_) => mismatched.push(format!("{} differs", path.display())),
            Err(e) => mismatched.push(format!("{}: {e}", path.display())),
        }
    }
    if mismatched.is_empty() {
        Ok(outputs.files.len())
    } else {
        Err(CliError::Data(format!("verification failed: {}", mismatched.join("; "))))
    }
}
