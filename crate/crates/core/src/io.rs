//! JSONL record schemas.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mag::MagSample;
use crate::retarget::RetargetResult;
use crate::tactile::{SensorGrid, TaxelPattern};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub fn schema(line: usize, message: impl Into<String>) -> Self {
        Self::Schema {
            line,
            message: message.into(),
        }
    }
}

/// Magnetometer reading of one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagRecord {
    pub t: f64,
    pub joint: usize,
    pub bx: f64,
    pub by: f64,
}

impl MagRecord {
    pub fn sample(&self) -> MagSample {
        MagSample::new(self.bx, self.by, self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointsRecord {
    pub t: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub t: f64,
    pub theta: Vec<f64>,
    pub cost: f64,
    pub iters: usize,
    pub converged: bool,
}

impl ResultRecord {
    pub fn new(t: f64, r: &RetargetResult) -> Self {
        Self {
            t,
            theta: r.theta.clone(),
            cost: r.cost,
            iters: r.iterations,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TactileRecord {
    pub t: f64,
    pub finger: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl TactileRecord {
    pub fn grid(&self) -> SensorGrid {
        SensorGrid {
            rows: self.rows,
            cols: self.cols,
            values: self.values.clone(),
            sensor: None,
        }
    }
}

/// Tracker pose; `q` is `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristRecord {
    pub t: f64,
    pub p: [f64; 3],
    pub q: [f64; 4],
}

impl WristRecord {
    pub fn from_isometry(t: f64, iso: &Isometry3<f64>) -> Self {
        let v = iso.translation.vector;
        let q = iso.rotation.quaternion();
        Self {
            t,
            p: [v.x, v.y, v.z],
            q: [q.w, q.i, q.j, q.k],
        }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        let [w, x, y, z] = self.q;
        Isometry3::from_parts(
            Translation3::from(Vector3::from(self.p)),
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternRecord {
    pub t: f64,
    pub finger: usize,
    pub pattern: TaxelPattern,
}

/// Parses JSONL, skipping blank lines. Errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, IoError> {
    read_jsonl(text.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned, R: Read>(reader: R) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| IoError::schema(i + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    read_jsonl(file)
}

pub fn write_jsonl<T: Serialize, W: Write>(writer: W, records: &[T]) -> Result<(), IoError> {
    let mut w = BufWriter::new(writer);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String, IoError> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn save_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    let file = File::create(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    write_jsonl(file, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mag_round_trip() {
        let r = MagRecord {
            t: 0.25,
            joint: 3,
            bx: 0.1,
            by: -0.7,
        };
        let text = to_jsonl(&[r, r]).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_jsonl::<MagRecord>(&text).unwrap(), vec![r, r]);
    }

    #[test]
    fn schema_error_names_line() {
        let text = "{\"t\":0,\"joint\":0,\"bx\":1,\"by\":0}\n\n{\"t\":0,\"joint\":0}\n";
        let err = parse_jsonl::<MagRecord>(text).unwrap_err();
        assert!(matches!(err, IoError::Schema { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("line 3"));
        let extra = "{\"t\":0,\"joint\":0,\"bx\":1,\"by\":0,\"z\":1}";
        assert!(parse_jsonl::<MagRecord>(extra).is_err());
    }

    #[test]
    fn wrist_pose_round_trip() {
        let iso = Isometry3::from_parts(
            Translation3::new(0.1, 0.2, 0.3),
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.1),
        );
        let back = WristRecord::from_isometry(1.0, &iso).isometry();
        assert!((back.translation.vector - iso.translation.vector).norm() < 1e-15);
        assert!(back.rotation.angle_to(&iso.rotation) < 1e-12);
    }

    #[test]
    fn pattern_record_uses_symbols() {
        let mut pattern = TaxelPattern::neutral();
        pattern.states[0] = crate::tactile::TaxelState::Protrude;
        let text = to_jsonl(&[PatternRecord {
            t: 0.0,
            finger: 1,
            pattern,
        }])
        .unwrap();
        assert!(text.contains("\"+0000"));
    }
}
