//! Snapshot files: a JSON header next to a raw little-endian payload.
//!
//! The payload holds 16 bytes per sample, real part then imaginary part as
//! `f64`, row-major in the header's axis order. The header carries enough to
//! rebuild the grid without the original config.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use phasespace::observables::ObservableSummary;
use phasespace::{make_grid, AxisSpec, EvolutionMode, Field, Params, Rep};

pub const SCHEMA_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelText {
    #[serde(rename = "T")]
    pub kinetic: String,
    #[serde(rename = "U")]
    pub potential: String,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema_version: String,
    pub run_id: String,
    pub mode: EvolutionMode,
    pub step: usize,
    pub time: f64,
    pub axes: Vec<AxisSpec>,
    pub reps: Vec<Rep>,
    pub hbar: f64,
    pub model: ModelText,
    pub splitting_order: String,
    pub summary: ObservableSummary,
    /// Payload file name, relative to the header.
    pub payload: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed header: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}: unsupported schema version {found} (this reader handles {SUPPORTED_MAJOR}.x)")]
    Version { path: PathBuf, found: String },
    #[error("{path}: payload is {found} bytes, expected {expected}")]
    Payload { path: PathBuf, found: usize, expected: usize },
}

/// Base file name for the snapshot taken at `step`.
pub fn snapshot_stem(step: usize) -> String {
    format!("snap_{step:06}")
}

pub fn encode_payload(field: &Field) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(field.len() * 16);
    for c in field.data() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
    bytes
}

pub fn decode_payload(bytes: &[u8]) -> Vec<Complex64> {
    bytes
        .chunks_exact(16)
        .map(|b| {
            let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect()
}

/// Writes `<stem>.bin` then `<stem>.json` into `dir`, returning the header
/// path. The header is written last so a present header implies a complete
/// payload.
pub fn write_snapshot(dir: &Path, header: &SnapshotHeader, field: &Field) -> io::Result<PathBuf> {
    let stem = snapshot_stem(header.step);
    fs::write(dir.join(&header.payload), encode_payload(field))?;
    let path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(header).map_err(io::Error::other)?;
    fs::write(&path, text)?;
    Ok(path)
}

/// Reads a header and its payload back into a field.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Field), SnapshotError> {
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| SnapshotError::Io { path: p, source }
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let header_err = |message: String| SnapshotError::Header { path: path.to_path_buf(), message };

    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| header_err(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| header_err("missing schema_version".into()))?;
    let major = version.split('.').next().and_then(|m| m.parse::<u32>().ok());
    if major != Some(SUPPORTED_MAJOR) {
        return Err(SnapshotError::Version { path: path.to_path_buf(), found: version.to_string() });
    }
    let header: SnapshotHeader = serde_json::from_value(value).map_err(|e| header_err(e.to_string()))?;

    let grid = make_grid(&header.axes, header.hbar).map_err(|e| header_err(e.to_string()))?;
    let payload_path = path.parent().unwrap_or(Path::new(".")).join(&header.payload);
    let bytes = fs::read(&payload_path).map_err(io_err(&payload_path))?;
    let expected = grid.len() * 16;
    if bytes.len() != expected {
        return Err(SnapshotError::Payload { path: payload_path, found: bytes.len(), expected });
    }
    let field =
        Field::from_data(&grid, header.reps.clone(), decode_payload(&bytes)).map_err(|e| header_err(e.to_string()))?;
    Ok((header, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use phasespace::AxisLabel;

    #[test]
    fn payload_layout() {
        let g = make_grid(&[AxisSpec::new(AxisLabel::X, 8, -1.0, 1.0), AxisSpec::new(AxisLabel::P, 8, -1.0, 1.0)], 1.0)
            .unwrap();
        let f = Field::from_fn(&g, |z| Complex64::new(z[0], z[1]));
        let bytes = encode_payload(&f);
        assert_eq!(bytes.len(), 16 * 64);
        assert_eq!(f64::from_le_bytes(bytes[0..8].try_into().unwrap()), -1.0);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), -0.75);
        assert_eq!(decode_payload(&bytes), f.data());
    }
}
