//! Reading and writing run artifacts.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::modeling::{ExtendedAnswerMatrix, ModelError};
use crate::strategy::{AnswerMatrix, StrategyError};
use crate::world::{Replay, ReplayError};

use super::experiment::ExperimentReport;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed artifact{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Malformed {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: format {found:?} is not the expected {expected:?}")]
    VersionMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
}

impl ArtifactError {
    pub fn io(path: &Path, source: std::io::Error) -> ArtifactError {
        ArtifactError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn malformed(path: &Path, message: impl Into<String>) -> ArtifactError {
        ArtifactError::Malformed {
            path: path.to_path_buf(),
            line: None,
            message: message.into(),
        }
    }
}

/// Write through a temporary sibling and rename, so a crash never leaves a
/// half-written artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ArtifactError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ArtifactError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| ArtifactError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| ArtifactError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, ArtifactError> {
    fs::read_to_string(path).map_err(|e| ArtifactError::io(path, e))
}

pub fn save_genome(path: &Path, genome: &AnswerMatrix) -> Result<(), ArtifactError> {
    write_atomic(path, genome.to_json().as_bytes())
}

pub fn load_genome(path: &Path) -> Result<AnswerMatrix, ArtifactError> {
    AnswerMatrix::from_json(&read_text(path)?).map_err(|e| match e {
        StrategyError::FormatMismatch { expected, found } => ArtifactError::VersionMismatch {
            path: path.to_path_buf(),
            expected,
            found,
        },
        other => ArtifactError::malformed(path, other.to_string()),
    })
}

pub fn save_model(path: &Path, model: &ExtendedAnswerMatrix) -> Result<(), ArtifactError> {
    write_atomic(path, model.to_json().as_bytes())
}

pub fn load_model(path: &Path) -> Result<ExtendedAnswerMatrix, ArtifactError> {
    ExtendedAnswerMatrix::from_json(&read_text(path)?).map_err(|e| match e {
        ModelError::FormatMismatch { expected, found } => ArtifactError::VersionMismatch {
            path: path.to_path_buf(),
            expected,
            found,
        },
        other => ArtifactError::malformed(path, other.to_string()),
    })
}

pub fn save_replay(path: &Path, replay: &Replay) -> Result<(), ArtifactError> {
    write_atomic(path, replay.to_jsonl().as_bytes())
}

pub fn load_replay(path: &Path) -> Result<Replay, ArtifactError> {
    let file = fs::File::open(path).map_err(|e| ArtifactError::io(path, e))?;
    Replay::read_jsonl(BufReader::new(file)).map_err(|e| match e {
        ReplayError::Malformed { line, message } => ArtifactError::Malformed {
            path: path.to_path_buf(),
            line: Some(line),
            message,
        },
        ReplayError::Io(source) => ArtifactError::io(path, source),
    })
}

pub fn save_report(path: &Path, report: &ExperimentReport) -> Result<(), ArtifactError> {
    write_atomic(path, report.to_json().as_bytes())
}

pub fn load_report(path: &Path) -> Result<ExperimentReport, ArtifactError> {
    ExperimentReport::from_json(&read_text(path)?).map_err(|e| match e {
        ReportFormatError::Version(found) => ArtifactError::VersionMismatch {
            path: path.to_path_buf(),
            expected: super::experiment::REPORT_FORMAT.to_string(),
            found,
        },
        ReportFormatError::Malformed(m) => ArtifactError::malformed(path, m),
    })
}

#[derive(Debug)]
pub enum ReportFormatError {
    Version(String),
    Malformed(String),
}

/// Generic JSON artifact with a `format` tag checked on load.
pub fn load_tagged<T: serde::de::DeserializeOwned>(
    path: &Path,
    expected: &str,
) -> Result<T, ArtifactError> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ArtifactError::malformed(path, e.to_string()))?;
    let found = value.get("format").and_then(|f| f.as_str()).unwrap_or("");
    if found != expected {
        return Err(ArtifactError::VersionMismatch {
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    serde_json::from_value(value).map_err(|e| ArtifactError::malformed(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::rbp_default;
    use crate::world::{Army, Event, TurnReport};

    #[test]
    fn genome_and_model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = dir.path().join("g.json");
        save_genome(&g, &rbp_default()).unwrap();
        let first = fs::read(&g).unwrap();
        let back = load_genome(&g).unwrap();
        assert_eq!(back, rbp_default());
        save_genome(&g, &back).unwrap();
        assert_eq!(fs::read(&g).unwrap(), first);

        let mut counts = [[0u64; 6]; 24];
        counts[4] = [1, 2, 3, 4, 5, 6];
        let m = ExtendedAnswerMatrix::from_counts(counts);
        let mp = dir.path().join("m.json");
        save_model(&mp, &m).unwrap();
        assert_eq!(load_model(&mp).unwrap(), m);
    }

    #[test]
    fn version_mismatch_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let g = dir.path().join("g.json");
        fs::write(&g, rbp_default().to_json().replace("-v1", "-v9")).unwrap();
        assert!(matches!(
            load_genome(&g),
            Err(ArtifactError::VersionMismatch { .. })
        ));

        let mut r = Replay::default();
        for turn in 0..3 {
            r.push(TurnReport {
                turn,
                events: vec![Event::Death {
                    unit_id: turn,
                    army: Army::Vp,
                    at: crate::Pos::new(0, 0),
                }],
            });
        }
        let text = r.to_jsonl();
        let rp = dir.path().join("r.jsonl");
        fs::write(&rp, &text[..text.len() - 8]).unwrap();
        match load_replay(&rp) {
            Err(ArtifactError::Malformed { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("expected malformed, got {other:?}"),
        }
    }
}
