//! JSON documents read and written by the CLI and the service.
//!
//! Every document carries `"format": 1`. Instance files hold the instance
//! fields at top level (`horizon`, `registrations`, `mss`, `capacities`,
//! `beds`) plus optional generation metadata; schedule files hold
//! `assignments`. Output is pretty-printed with a trailing newline and is
//! byte-identical for equal values.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use orsched_core::generator::{Generated, ScenarioSpec, GENERATOR_VERSION};
use orsched_core::reschedule::{RescheduleObjective, RescheduleOutcome};
use orsched_core::verifier::{ObjectiveVector, Violation};
use orsched_core::{Assignment, Instance, RegistrationId, Schedule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Name of the random number generator behind generated instances.
pub const GENERATOR_RNG: &str = "chacha8";

#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: unsupported format {found} (expected {FORMAT_VERSION})")]
    Format { path: PathBuf, found: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetadata {
    pub scenario: String,
    pub days: u32,
    pub seed: u64,
    pub generator_version: u32,
    pub rng: String,
    /// The bed table was shorter than the horizon and was repeated.
    pub beds_cycled: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GenerationMetadata {
    pub fn new(spec: &ScenarioSpec, days: u32, seed: u64, generated: &Generated) -> Self {
        Self {
            scenario: spec.name.clone(),
            days,
            seed,
            generator_version: GENERATOR_VERSION,
            rng: GENERATOR_RNG.to_owned(),
            beds_cycled: generated.beds_cycled,
            warnings: generated.warnings.clone(),
        }
    }
}

fn format_one() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "format_one")]
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<GenerationMetadata>,
    #[serde(flatten)]
    pub instance: Instance,
}

impl InstanceFile {
    pub fn new(instance: Instance, metadata: Option<GenerationMetadata>) -> Self {
        Self {
            format: FORMAT_VERSION,
            metadata,
            instance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    #[serde(default = "format_one")]
    pub format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveVector>,
    pub assignments: Vec<Assignment>,
}

impl ScheduleFile {
    pub fn new(schedule: &Schedule, objective: Option<ObjectiveVector>) -> Self {
        Self {
            format: FORMAT_VERSION,
            objective,
            assignments: schedule.assignments.clone(),
        }
    }

    /// The assignments as read, duplicates included.
    pub fn schedule(&self) -> Schedule {
        Schedule {
            assignments: self.assignments.clone(),
        }
    }
}

/// Result of a reschedule: the new assignments after the disruption day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescheduleFile {
    #[serde(default = "format_one")]
    pub format: u32,
    pub objective: RescheduleObjective,
    pub level4_offset: u32,
    pub dropped: Vec<RegistrationId>,
    pub assignments: Vec<Assignment>,
}

impl RescheduleFile {
    pub fn new(outcome: &RescheduleOutcome) -> Self {
        Self {
            format: FORMAT_VERSION,
            objective: outcome.objective,
            level4_offset: outcome.level4_offset,
            dropped: outcome.dropped.clone(),
            assignments: outcome.new_schedule.assignments.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents serialize");
    out.push(b'\n');
    out
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    static NEXT: AtomicU64 = AtomicU64::new(0);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(".{name}.{}.{n}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    write_atomic(path, &to_json_bytes(value)).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let bytes = fs::read(path).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| FileError::Json {
        path: path.to_owned(),
        source,
    })
}

fn check_format(path: &Path, found: u32) -> Result<(), FileError> {
    if found == FORMAT_VERSION {
        Ok(())
    } else {
        Err(FileError::Format {
            path: path.to_owned(),
            found,
        })
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile, FileError> {
    let file: InstanceFile = read_json(path)?;
    check_format(path, file.format)?;
    Ok(file)
}

pub fn read_schedule(path: &Path) -> Result<ScheduleFile, FileError> {
    let file: ScheduleFile = read_json(path)?;
    check_format(path, file.format)?;
    Ok(file)
}
