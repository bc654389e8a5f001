//! Log replay through the full pipeline.
//!
//! Glove frames run decode, forward kinematics, scaling and hand
//! retargeting. Tracker poses are held to the glove clock and drive arm
//! retargeting. Tactile frames are mapped to taxel patterns and encoded
//! into one driver chain record per timestamp.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::{self, ChainStream};
use crate::config::PipelineConfig;
use crate::io::{
    self, IoError, JointsRecord, MagRecord, PatternRecord, ResultRecord, TactileRecord,
    WristRecord,
};
use crate::kinematics::{
    forward_kinematics, load_model, scale_targets, FingertipPose, HandModel, Kinematics,
    FINGER_NAMES,
};
use crate::mag::{decode_angle, CalibrationAccumulator, CalibrationSet, MagError, JOINT_COUNT};
use crate::retarget::{
    opposition_targets, solve_arm_ik, solve_hand_retarget, wrist_target, RetargetResult,
};
use crate::tactile::TaxelPattern;

pub const STAGES: [&str; 5] = ["decode", "hand", "arm", "map", "encode"];
pub const SOURCES: [&str; 4] = ["mag", "calibration", "tactile", "wrist"];

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{stream}: {source}")]
    Schema { stream: String, source: IoError },
    #[error("unknown stream {0:?}, expected one of mag, calibration, tactile, wrist")]
    UnknownSource(String),
    #[error("stream {name} not found at {path}")]
    MissingSource { name: String, path: String },
    #[error("a mag stream is required")]
    NoMagStream,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("calibrating joint {joint}: {source}")]
    Calibration { joint: usize, source: MagError },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("writing {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl ReplayError {
    /// Whether the error stems from bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Self::Io(_) | Self::Write { .. })
    }
}

/// Record counts and wall time for one stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub name: String,
    pub input: usize,
    pub output: usize,
    pub skipped: usize,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_error: Option<String>,
}

impl StageStats {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    fn record<T, E: std::fmt::Display>(&mut self, started: Instant, r: Result<T, E>) -> Option<T> {
        self.seconds += started.elapsed().as_secs_f64();
        self.input += 1;
        match r {
            Ok(v) => {
                self.output += 1;
                Some(v)
            }
            Err(e) => {
                self.skipped += 1;
                self.last_error = Some(e.to_string());
                None
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayStats {
    pub stages: Vec<StageStats>,
    /// Span of glove timestamps in seconds.
    pub log_seconds: f64,
    pub wall_seconds: f64,
    /// Wall time of each glove frame through decode, hand and arm.
    #[serde(skip)]
    pub frame_seconds: Vec<f64>,
}

impl ReplayStats {
    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Log time over wall time.
    pub fn realtime_factor(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.log_seconds / self.wall_seconds
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayInputs {
    pub mag: Vec<MagRecord>,
    /// Calibration per joint; derived from the mag stream when absent.
    pub calibration: Option<CalibrationSet>,
    pub tactile: Vec<TactileRecord>,
    pub wrist: Vec<WristRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayOutputs {
    /// Decoded operator joint angles.
    pub joints: Vec<JointsRecord>,
    pub hand: Vec<ResultRecord>,
    pub arm: Vec<ResultRecord>,
    pub patterns: Vec<PatternRecord>,
    pub feedback: Vec<(f64, ChainStream)>,
}

impl ReplayOutputs {
    pub fn feedback_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (_, s) in &self.feedback {
            out.extend(s.to_record().expect("encoder emits valid streams"));
        }
        out
    }
}

fn check_order<'a>(stream: &str, times: impl Iterator<Item = &'a f64>) -> Result<(), ReplayError> {
    let mut prev = f64::NEG_INFINITY;
    for (i, &t) in times.enumerate() {
        if !t.is_finite() || t < prev {
            return Err(ReplayError::Schema {
                stream: stream.into(),
                source: IoError::schema(i + 1, format!("timestamp {t} out of order")),
            });
        }
        prev = t;
    }
    Ok(())
}

/// Groups consecutive records with equal timestamps.
pub fn glove_frames(mag: &[MagRecord]) -> Vec<&[MagRecord]> {
    mag.chunk_by(|a, b| a.t == b.t).collect()
}

/// Models and configuration for the stage chain.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub hand: HandModel,
    pub arm: Option<Kinematics>,
    lambdas: Vec<f64>,
}

impl Pipeline {
    pub fn new(config: &PipelineConfig) -> Result<Self, ReplayError> {
        let hand = load_model(&config.model.hand).map_err(|e| ReplayError::Config(e.to_string()))?;
        let arm = match &config.model.arm {
            Some(doc) => {
                Some(Kinematics::from_doc(doc).map_err(|e| ReplayError::Config(e.to_string()))?)
            }
            None => None,
        };
        config
            .retarget
            .validate()
            .map_err(|e| ReplayError::Config(e.to_string()))?;
        config
            .tactile
            .layout
            .validate()
            .map_err(|e| ReplayError::Config(e.to_string()))?;
        config
            .tactile
            .sensor(&config.replay.tactile_sensor)
            .map_err(|e| ReplayError::Config(e.to_string()))?;
        let lambdas = hand.default_lambdas();
        Ok(Self {
            config: config.clone(),
            hand,
            arm,
            lambdas,
        })
    }

    pub fn calibrate(&self, mag: &[MagRecord]) -> Result<CalibrationSet, ReplayError> {
        let mut acc: Vec<CalibrationAccumulator> =
            (0..JOINT_COUNT).map(|_| CalibrationAccumulator::new()).collect();
        for r in mag {
            if let Some(a) = acc.get_mut(r.joint) {
                // Non-finite readings are left for the decode stage to reject.
                let _ = a.push(&r.sample());
            }
        }
        let mut set = CalibrationSet::default();
        for (joint, a) in acc.iter().enumerate() {
            let state = a
                .finalize(&self.config.replay.decode)
                .map_err(|source| ReplayError::Calibration { joint, source })?;
            set.insert(joint, state);
        }
        Ok(set)
    }

    /// Joint angles of one glove frame; every joint must appear once.
    pub fn decode_frame(
        &self,
        frame: &[MagRecord],
        calibration: &CalibrationSet,
    ) -> Result<Vec<f64>, String> {
        let mut theta = vec![f64::NAN; JOINT_COUNT];
        for r in frame {
            let calib = calibration
                .get(r.joint)
                .ok_or_else(|| format!("no calibration for joint {}", r.joint))?;
            if !theta[r.joint].is_nan() {
                return Err(format!("joint {} repeated at t={}", r.joint, r.t));
            }
            theta[r.joint] = decode_angle(r.joint, &r.sample(), calib)
                .map_err(|e| format!("joint {}: {e}", r.joint))?
                .theta;
        }
        if let Some(j) = theta.iter().position(|t| t.is_nan()) {
            return Err(format!("joint {j} missing at t={}", frame[0].t));
        }
        Ok(theta)
    }

    /// Scaled fingertip targets and opposition distances for operator
    /// joint angles.
    pub fn hand_targets(&self, theta: &[f64]) -> Result<(Vec<FingertipPose>, Vec<f64>), String> {
        let poses = forward_kinematics(&self.hand, theta).map_err(|e| e.to_string())?;
        let targets = scale_targets(&poses, &self.lambdas).map_err(|e| e.to_string())?;
        let opposition = opposition_targets(&targets);
        Ok((targets, opposition))
    }

    pub fn retarget_hand(&self, theta: &[f64], theta_last: &[f64]) -> Result<RetargetResult, String> {
        let (targets, opposition) = self.hand_targets(theta)?;
        solve_hand_retarget(
            &targets,
            theta_last,
            &opposition,
            &self.config.retarget,
            &self.hand,
        )
        .map_err(|e| e.to_string())
    }

    /// Robot joint configuration before the first frame.
    pub fn hand_home(&self) -> Vec<f64> {
        self.hand.clamp(&vec![0.0; self.hand.dof()])
    }

    pub fn arm_home(&self) -> Option<Vec<f64>> {
        self.arm.as_ref().map(|a| a.clamp(&vec![0.0; a.dof()]))
    }

    pub fn map_tactile(&self, record: &TactileRecord) -> Result<TaxelPattern, String> {
        if record.finger >= FINGER_NAMES.len() {
            return Err(format!("finger {} out of range", record.finger));
        }
        let grid = record.grid();
        grid.validate().map_err(|e| e.to_string())?;
        self.config
            .tactile
            .map_raw(&grid, &self.config.replay.tactile_sensor)
            .map_err(|e| e.to_string())
    }

    /// Runs every stage over the inputs.
    pub fn run(&self, inputs: &ReplayInputs) -> Result<(ReplayOutputs, ReplayStats), ReplayError> {
        let wall = Instant::now();
        check_order("mag", inputs.mag.iter().map(|r| &r.t))?;
        check_order("tactile", inputs.tactile.iter().map(|r| &r.t))?;
        check_order("wrist", inputs.wrist.iter().map(|r| &r.t))?;
        if let Some(i) = inputs.mag.iter().position(|r| r.joint >= JOINT_COUNT) {
            return Err(ReplayError::Schema {
                stream: "mag".into(),
                source: IoError::schema(i + 1, format!("joint {} out of range", inputs.mag[i].joint)),
            });
        }

        let mut out = ReplayOutputs::default();
        let mut decode = StageStats::new("decode");
        let mut hand = StageStats::new("hand");
        let mut arm = StageStats::new("arm");
        let mut map = StageStats::new("map");
        let mut encode = StageStats::new("encode");

        let calibration = match (&inputs.calibration, inputs.mag.is_empty()) {
            (Some(c), _) => c.clone(),
            (None, true) => CalibrationSet::default(),
            (None, false) => self.calibrate(&inputs.mag)?,
        };

        let frames = glove_frames(&inputs.mag);
        let mut theta_last = self.hand_home();
        let run_arm = self.config.replay.arm && !inputs.wrist.is_empty();
        let arm_model = self.arm.as_ref().filter(|_| run_arm);
        let mut arm_last = self.arm_home().unwrap_or_default();
        let robot_init: Option<Isometry3<f64>> =
            arm_model.map(|a| a.chain_state(0, &arm_last).tip);
        let mut wrist_init: Option<Isometry3<f64>> = None;
        let mut wrist_cursor = 0usize;

        let mut frame_seconds = Vec::with_capacity(frames.len());
        for frame in &frames {
            let t = frame[0].t;
            let frame_start = Instant::now();
            let started = frame_start;
            let decoded = self.decode_frame(frame, &calibration);
            let Some(theta) = decode.record(started, decoded) else {
                continue;
            };

            let started = Instant::now();
            let solved = self.retarget_hand(&theta, &theta_last);
            if let Some(r) = hand.record(started, solved) {
                theta_last.clone_from(&r.theta);
                out.hand.push(ResultRecord::new(t, &r));
            }
            out.joints.push(JointsRecord { t, theta });

            if let (Some(model), Some(robot_init)) = (arm_model, robot_init.as_ref()) {
                while wrist_cursor < inputs.wrist.len() && inputs.wrist[wrist_cursor].t <= t {
                    wrist_cursor += 1;
                }
                let started = Instant::now();
                let solved = match wrist_cursor.checked_sub(1) {
                    None => Err(format!("no tracker pose at or before t={t}")),
                    Some(i) => {
                        let now = inputs.wrist[i].isometry();
                        let init = *wrist_init.get_or_insert(now);
                        let target =
                            wrist_target(&now, &init, robot_init, self.config.retarget.wrist_lambda);
                        solve_arm_ik(&target, &arm_last, model, &self.config.retarget)
                            .map_err(|e| e.to_string())
                    }
                };
                if let Some(r) = arm.record(started, solved) {
                    arm_last.clone_from(&r.theta);
                    out.arm.push(ResultRecord::new(t, &r));
                }
            }
            frame_seconds.push(frame_start.elapsed().as_secs_f64());
        }

        for record in &inputs.tactile {
            let started = Instant::now();
            let mapped = self.map_tactile(record);
            if let Some(pattern) = map.record(started, mapped) {
                out.patterns.push(PatternRecord {
                    t: record.t,
                    finger: record.finger,
                    pattern,
                });
            }
        }

        for group in out.patterns.chunk_by(|a, b| a.t == b.t) {
            let started = Instant::now();
            let mut modules = [TaxelPattern::neutral(); 5];
            let mut seen = [false; 5];
            let mut dup = None;
            for p in group {
                if std::mem::replace(&mut seen[p.finger], true) {
                    dup = Some(p.finger);
                }
                modules[p.finger] = p.pattern;
            }
            let encoded = match dup {
                Some(f) => Err(format!("finger {f} repeated at t={}", group[0].t)),
                None => actuator::encode_patterns(&modules).map_err(|e| e.to_string()),
            };
            if let Some(stream) = encode.record(started, encoded) {
                out.feedback.push((group[0].t, stream));
            }
        }

        let log_seconds = match (frames.first(), frames.last()) {
            (Some(a), Some(b)) => {
                let span = b[0].t - a[0].t;
                span + if frames.len() > 1 {
                    span / (frames.len() - 1) as f64
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let stats = ReplayStats {
            stages: vec![decode, hand, arm, map, encode],
            log_seconds,
            wall_seconds: wall.elapsed().as_secs_f64(),
            frame_seconds,
        };
        Ok((out, stats))
    }
}

/// File-backed replay: named input streams and an output directory.
#[derive(Debug, Clone)]
pub struct ReplaySession {
    pub sources: BTreeMap<String, PathBuf>,
    pub config: PipelineConfig,
    pub output_dir: PathBuf,
    /// Written files per stage, filled by [`ReplaySession::run`].
    pub outputs: BTreeMap<String, PathBuf>,
    pub stats: Option<ReplayStats>,
}

impl ReplaySession {
    pub fn new(config: PipelineConfig, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            sources: BTreeMap::new(),
            config,
            output_dir: output_dir.into(),
            outputs: BTreeMap::new(),
            stats: None,
        }
    }

    pub fn source(mut self, name: &str, path: impl Into<PathBuf>) -> Self {
        self.sources.insert(name.into(), path.into());
        self
    }

    fn check_sources(&self) -> Result<(), ReplayError> {
        for (name, path) in &self.sources {
            if !SOURCES.contains(&name.as_str()) {
                return Err(ReplayError::UnknownSource(name.clone()));
            }
            if !path.is_file() {
                return Err(ReplayError::MissingSource {
                    name: name.clone(),
                    path: path.display().to_string(),
                });
            }
        }
        if !self.sources.contains_key("mag") {
            return Err(ReplayError::NoMagStream);
        }
        Ok(())
    }

    fn load<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, ReplayError> {
        match self.sources.get(name) {
            None => Ok(Vec::new()),
            Some(p) => io::load_jsonl(p).map_err(|source| match source {
                IoError::Schema { .. } => ReplayError::Schema {
                    stream: name.into(),
                    source,
                },
                other => ReplayError::Io(other),
            }),
        }
    }

    pub fn inputs(&self) -> Result<ReplayInputs, ReplayError> {
        self.check_sources()?;
        let calibration = match self.sources.get("calibration") {
            None => None,
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| IoError::File {
                    path: p.display().to_string(),
                    source,
                })?;
                Some(CalibrationSet::from_toml(&text).map_err(|e| {
                    ReplayError::Config(format!("{}: {e}", p.display()))
                })?)
            }
        };
        Ok(ReplayInputs {
            mag: self.load("mag")?,
            calibration,
            tactile: self.load("tactile")?,
            wrist: self.load("wrist")?,
        })
    }

    pub fn run(&mut self) -> Result<&ReplayStats, ReplayError> {
        let inputs = self.inputs()?;
        let pipeline = Pipeline::new(&self.config)?;
        let (out, stats) = pipeline.run(&inputs)?;
        fs::create_dir_all(&self.output_dir).map_err(|source| ReplayError::Write {
            path: self.output_dir.display().to_string(),
            source,
        })?;
        let dir = self.output_dir.clone();
        let mut written = BTreeMap::new();
        let mut save = |stage: &str, file: &str, text: Result<Vec<u8>, IoError>| {
            let path = dir.join(file);
            fs::write(&path, text?).map_err(|source| ReplayError::Write {
                path: path.display().to_string(),
                source,
            })?;
            written.insert(stage.to_string(), path);
            Ok::<_, ReplayError>(())
        };
        save("decode", "joints.jsonl", io::to_jsonl(&out.joints).map(String::into_bytes))?;
        save("hand", "hand.jsonl", io::to_jsonl(&out.hand).map(String::into_bytes))?;
        save("arm", "arm.jsonl", io::to_jsonl(&out.arm).map(String::into_bytes))?;
        save("map", "patterns.jsonl", io::to_jsonl(&out.patterns).map(String::into_bytes))?;
        save("encode", "feedback.tagf", Ok(out.feedback_bytes()))?;
        save(
            "stats",
            "stats.json",
            serde_json::to_vec_pretty(&stats).map_err(IoError::from),
        )?;
        self.outputs = written;
        Ok(self.stats.insert(stats))
    }
}

/// Path of the stats document written by a session.
pub fn stats_path(dir: &Path) -> PathBuf {
    dir.join("stats.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthOptions};

    fn short_log() -> crate::synth::SyntheticLog {
        let m = HandModel::default_model();
        generate(
            &m,
            &SynthOptions {
                duration_s: 0.5,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn empty_log() {
        let p = Pipeline::new(&PipelineConfig::bundled()).unwrap();
        let (out, stats) = p.run(&ReplayInputs::default()).unwrap();
        assert_eq!(out, ReplayOutputs::default());
        assert!(stats.stages.iter().all(|s| s.input == 0 && s.output == 0));
    }

    #[test]
    fn single_record_decode() {
        let log = short_log();
        let p = Pipeline::new(&PipelineConfig::bundled()).unwrap();
        let frame = &log.mag[..JOINT_COUNT];
        let inputs = ReplayInputs {
            mag: frame.to_vec(),
            calibration: Some(log.calibration.clone()),
            ..Default::default()
        };
        let (out, _) = p.run(&inputs).unwrap();
        assert_eq!(out.joints.len(), 1);
        for r in frame {
            let direct =
                decode_angle(r.joint, &r.sample(), log.calibration.get(r.joint).unwrap()).unwrap();
            assert_eq!(out.joints[0].theta[r.joint], direct.theta);
        }
    }

    #[test]
    fn accounting_and_skips() {
        let mut log = short_log();
        // Drop one joint from the third frame.
        log.mag.remove(2 * JOINT_COUNT + 4);
        let p = Pipeline::new(&PipelineConfig::bundled()).unwrap();
        let inputs = ReplayInputs {
            mag: log.mag,
            calibration: Some(log.calibration),
            tactile: log.tactile,
            wrist: log.wrist,
        };
        let (out, stats) = p.run(&inputs).unwrap();
        for s in &stats.stages {
            assert_eq!(s.input, s.output + s.skipped, "{}", s.name);
        }
        let d = stats.stage("decode").unwrap();
        assert_eq!(d.skipped, 1);
        assert!(d.last_error.as_ref().unwrap().contains("joint 4 missing"));
        assert_eq!(out.hand.len(), d.output);
        assert!(out.hand.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(out.feedback.len(), 30);
    }

    #[test]
    fn out_of_order_is_schema_error() {
        let log = short_log();
        let mut mag = log.mag[..2 * JOINT_COUNT].to_vec();
        mag.swap(0, JOINT_COUNT);
        let p = Pipeline::new(&PipelineConfig::bundled()).unwrap();
        let err = p
            .run(&ReplayInputs {
                mag,
                ..Default::default()
            })
            .unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.is_validation());
    }

    #[test]
    fn session_rejects_missing_stream() {
        let dir = std::env::temp_dir().join("glove-replay-missing");
        let mut s = ReplaySession::new(PipelineConfig::bundled(), &dir)
            .source("mag", dir.join("nope.jsonl"));
        assert!(matches!(s.run(), Err(ReplayError::MissingSource { .. })));
        let mut s = ReplaySession::new(PipelineConfig::bundled(), &dir).source("video", "x");
        assert!(matches!(s.run(), Err(ReplayError::UnknownSource(_))));
    }
}
