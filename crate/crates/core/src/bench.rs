//! Throughput workloads.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PipelineConfig;
use crate::io::ResultRecord;
use crate::kinematics::Kinematics;
use crate::replay::{Pipeline, ReplayError, ReplayInputs};
use crate::retarget::{solve_arm_ik, wrist_target, RetargetResult};
use crate::synth::{generate, SynthOptions};

pub const WORKLOADS: [&str; 3] = ["hand_retarget", "arm_ik", "full_chain"];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown workload {0:?}; available: hand_retarget, arm_ik, full_chain")]
    UnknownWorkload(String),
    #[error("configuration has no arm model")]
    NoArm,
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{0}")]
    Stage(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    /// Solves for the solver workloads.
    pub count: usize,
    /// Log length for `full_chain`.
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            count: 2000,
            duration_s: 60.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub workload: String,
    pub records: usize,
    pub seconds: f64,
    /// Solves or glove records per second.
    pub rate: f64,
    pub median_us: f64,
    pub p99_us: f64,
    /// Log time over wall time, for `full_chain`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realtime_factor: Option<f64>,
    /// FNV-1a over every result value; independent of timing.
    pub checksum: String,
}

#[derive(Debug, Clone, Copy)]
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn bytes(&mut self, b: &[u8]) {
        for &x in b {
            self.0 ^= u64::from(x);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.bytes(&x.to_bits().to_le_bytes());
        }
    }

    fn result(&mut self, r: &RetargetResult) {
        self.f64s(&r.theta);
        self.f64s(&[r.cost]);
        self.bytes(&(r.iterations as u64).to_le_bytes());
        self.bytes(&[u8::from(r.converged)]);
    }

    fn record(&mut self, r: &ResultRecord) {
        self.f64s(&r.theta);
        self.f64s(&[r.t, r.cost]);
        self.bytes(&(r.iters as u64).to_le_bytes());
        self.bytes(&[u8::from(r.converged)]);
    }

    fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

fn report(workload: &str, mut latencies: Vec<f64>, seconds: f64, checksum: &Fnv) -> BenchReport {
    latencies.sort_by(f64::total_cmp);
    let records = latencies.len();
    BenchReport {
        workload: workload.into(),
        records,
        seconds,
        rate: if seconds > 0.0 { records as f64 / seconds } else { f64::INFINITY },
        median_us: percentile(&latencies, 0.5) * 1e6,
        p99_us: percentile(&latencies, 0.99) * 1e6,
        realtime_factor: None,
        checksum: checksum.hex(),
    }
}

pub fn run(config: &PipelineConfig, workload: &str, options: &BenchOptions) -> Result<BenchReport, BenchError> {
    match workload {
        "hand_retarget" => hand_retarget(config, options),
        "arm_ik" => arm_ik(config, options),
        "full_chain" => full_chain(config, options),
        other => Err(BenchError::UnknownWorkload(other.into())),
    }
}

/// Warm-started hand solves along a smooth synthetic joint trajectory.
pub fn hand_retarget(config: &PipelineConfig, options: &BenchOptions) -> Result<BenchReport, BenchError> {
    let pipeline = Pipeline::new(config)?;
    let rate = config.replay.glove_rate_hz;
    let log = generate(
        &pipeline.hand,
        &SynthOptions {
            duration_s: options.count as f64 / rate,
            glove_rate_hz: rate,
            tactile: false,
            wrist: false,
            seed: options.seed,
            ..Default::default()
        },
    )
    .map_err(|e| BenchError::Stage(e.to_string()))?;
    let targets: Vec<_> = log
        .truth
        .iter()
        .map(|theta| pipeline.hand_targets(theta))
        .collect::<Result<_, _>>()
        .map_err(BenchError::Stage)?;

    let mut last = pipeline.hand_home();
    let mut latencies = Vec::with_capacity(targets.len());
    let mut sum = Fnv::new();
    let wall = Instant::now();
    for (t, opp) in &targets {
        let start = Instant::now();
        let r = crate::retarget::solve_hand_retarget(t, &last, opp, &config.retarget, &pipeline.hand)
            .map_err(|e| BenchError::Stage(e.to_string()))?;
        latencies.push(start.elapsed().as_secs_f64());
        sum.result(&r);
        last = r.theta;
    }
    Ok(report("hand_retarget", latencies, wall.elapsed().as_secs_f64(), &sum))
}

/// Warm-started arm solves following synthetic tracker motion.
pub fn arm_ik(config: &PipelineConfig, options: &BenchOptions) -> Result<BenchReport, BenchError> {
    let pipeline = Pipeline::new(config)?;
    let arm: &Kinematics = pipeline.arm.as_ref().ok_or(BenchError::NoArm)?;
    let rate = config.replay.tracker_rate_hz;
    let log = generate(
        &pipeline.hand,
        &SynthOptions {
            duration_s: options.count as f64 / rate,
            glove_rate_hz: 1.0,
            tracker_rate_hz: rate,
            tactile: false,
            seed: options.seed,
            ..Default::default()
        },
    )
    .map_err(|e| BenchError::Stage(e.to_string()))?;
    let mut last = pipeline.arm_home().expect("arm present");
    let robot_init = arm.chain_state(0, &last).tip;
    let init = log.wrist[0].isometry();
    let mut latencies = Vec::with_capacity(log.wrist.len());
    let mut sum = Fnv::new();
    let wall = Instant::now();
    for w in &log.wrist {
        let start = Instant::now();
        let target = wrist_target(&w.isometry(), &init, &robot_init, config.retarget.wrist_lambda);
        let r = solve_arm_ik(&target, &last, arm, &config.retarget)
            .map_err(|e| BenchError::Stage(e.to_string()))?;
        latencies.push(start.elapsed().as_secs_f64());
        sum.result(&r);
        last = r.theta;
    }
    Ok(report("arm_ik", latencies, wall.elapsed().as_secs_f64(), &sum))
}

/// Replay of a synthetic glove, tracker and tactile log.
pub fn full_chain(config: &PipelineConfig, options: &BenchOptions) -> Result<BenchReport, BenchError> {
    let pipeline = Pipeline::new(config)?;
    let log = generate(
        &pipeline.hand,
        &SynthOptions {
            duration_s: options.duration_s,
            glove_rate_hz: config.replay.glove_rate_hz,
            tracker_rate_hz: config.replay.tracker_rate_hz,
            seed: options.seed,
            ..Default::default()
        },
    )
    .map_err(|e| BenchError::Stage(e.to_string()))?;
    let inputs = ReplayInputs {
        mag: log.mag,
        calibration: Some(log.calibration),
        tactile: log.tactile,
        wrist: log.wrist,
    };
    let (out, stats) = pipeline.run(&inputs)?;
    let mut sum = Fnv::new();
    for r in out.hand.iter().chain(&out.arm) {
        sum.record(r);
    }
    sum.bytes(&out.feedback_bytes());
    let mut rep = report("full_chain", stats.frame_seconds.clone(), stats.wall_seconds, &sum);
    rep.realtime_factor = Some(stats.realtime_factor());
    Ok(rep)
}
