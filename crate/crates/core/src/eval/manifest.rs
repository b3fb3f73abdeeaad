use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detect::EndpointRef;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

/// One line of a manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Audio path; relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_ms: Option<f64>,
}

impl ManifestEntry {
    pub fn reference(&self) -> Option<EndpointRef> {
        match (self.start_ms, self.end_ms) {
            (Some(start_ms), Some(end_ms)) => Some(EndpointRef { start_ms, end_ms }),
            _ => None,
        }
    }
}

/// JSON-lines list of labelled utterances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parses manifest text. Relative paths are joined onto `base`; every
    /// path must exist.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Manifest { line: line_no, msg };
            let mut entry: ManifestEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            match (entry.start_ms, entry.end_ms) {
                (None, None) => {}
                (Some(s), Some(e)) if s >= 0.0 && s < e => {}
                (Some(_), Some(_)) => return Err(bad("reference needs 0 <= start_ms < end_ms".into())),
                _ => return Err(bad("start_ms and end_ms must be given together".into())),
            }
            if entry.path.is_relative() {
                entry.path = base.join(&entry.path);
            }
            if !entry.path.exists() {
                return Err(bad(format!("{} does not exist", entry.path.display())));
            }
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.at(path))
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
