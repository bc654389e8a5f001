use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use glove_core::actuator::{self, encode_patterns};
use glove_core::bench::{self, BenchOptions};
use glove_core::config::PipelineConfig;
use glove_core::io::{self, JointsRecord, MagRecord, PatternRecord, ResultRecord, TactileRecord};
use glove_core::kinematics::{forward_kinematics, load_model};
use glove_core::mag::{CalibrationAccumulator, CalibrationSet};
use glove_core::replay::{glove_frames, Pipeline, ReplaySession};
use glove_core::scan::{full_scan, ResistiveMatrix};
use glove_core::stats::{drift_report, error_stats, histogram_csv};
use glove_core::synth::{generate, SynthOptions};
use glove_core::tactile::{MappingMode, TaxelPattern};

#[derive(Parser)]
#[command(name = "glove", version, about = "Tactile glove signal chain tools")]
struct Cli {
    /// Pipeline configuration (TOML); the bundled defaults fill gaps.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Output file or directory; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-joint offsets and amplitude from a sweep log.
    Calibrate { input: PathBuf },
    /// Joint angle frames from a magnetometer log.
    Decode {
        input: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
    },
    /// Fingertip poses for joint angle frames.
    Fk { input: PathBuf },
    /// Robot hand joint angles for operator joint angle frames.
    Retarget { input: PathBuf },
    /// Taxel patterns for tactile frames.
    Map {
        input: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        sensor: Option<String>,
    },
    /// Driver stream records for pattern frames, or a hex dump of a stream file.
    Encode {
        input: PathBuf,
        /// Treat the input as a stream file and print each record as hex.
        #[arg(long)]
        dump: bool,
    },
    /// Force grids from resistance plants (tactile frame schema, ohms).
    Scan { input: PathBuf },
    /// Full pipeline over recorded streams into the `--out` directory.
    Replay {
        #[arg(long)]
        mag: PathBuf,
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        tactile: Option<PathBuf>,
        #[arg(long)]
        wrist: Option<PathBuf>,
    },
    /// Throughput of a named workload: hand_retarget, arm_ik or full_chain.
    Bench {
        workload: String,
        #[arg(long, default_value_t = 2000)]
        count: usize,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
    },
    /// Error statistics or drift of a text file of values, one per line.
    Stats {
        input: PathBuf,
        /// Drift between the first and last windows of this many seconds.
        #[arg(long)]
        drift_window: Option<f64>,
        #[arg(long, default_value_t = 260.0)]
        rate: f64,
        /// Also write a histogram CSV here.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Synthetic glove, tracker and tactile logs into the `--out` directory.
    Synth {
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[arg(long, default_value_t = 0.002)]
        noise: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Shape,
    Pressure,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl ToString) -> Failure {
    Failure::Validation(e.to_string())
}

fn runtime(e: impl ToString) -> Failure {
    Failure::Runtime(e.to_string())
}

fn io_failure(e: io::IoError) -> Failure {
    match e {
        io::IoError::Schema { .. } | io::IoError::Json(_) => invalid(e),
        _ => runtime(e),
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    io::load_jsonl(path).map_err(io_failure)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(runtime),
    }
}

fn emit_jsonl<T: Serialize>(out: &Option<PathBuf>, records: &[T]) -> Outcome {
    emit(out, io::to_jsonl(records).map_err(io_failure)?.as_bytes())
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct PoseRecord {
    t: f64,
    finger: usize,
    p: [f64; 3],
    q: [f64; 4],
}

#[derive(Serialize)]
struct ScanRecord {
    #[serde(flatten)]
    frame: TactileRecord,
    saturated: Vec<bool>,
}

#[derive(Serialize)]
struct HexRecord {
    module_count: usize,
    hex: String,
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(p) => PipelineConfig::load(p).map_err(invalid)?,
        None => PipelineConfig::bundled(),
    };
    let out = &cli.out;
    match cli.command {
        Command::Calibrate { input } => {
            let records: Vec<MagRecord> = load(&input)?;
            let mut acc: std::collections::BTreeMap<usize, CalibrationAccumulator> =
                Default::default();
            for r in &records {
                acc.entry(r.joint).or_default().push(&r.sample()).map_err(invalid)?;
            }
            let mut set = CalibrationSet::default();
            for (joint, a) in acc {
                let state = a
                    .finalize(&config.replay.decode)
                    .map_err(|e| invalid(format!("joint {joint}: {e}")))?;
                set.insert(joint, state);
            }
            emit(out, set.to_toml().map_err(runtime)?.as_bytes())
        }
        Command::Decode { input, calibration } => {
            let records: Vec<MagRecord> = load(&input)?;
            let set = CalibrationSet::from_toml(&read_file(&calibration)?).map_err(invalid)?;
            let pipeline = Pipeline::new(&config).map_err(invalid)?;
            let mut frames = Vec::new();
            for frame in glove_frames(&records) {
                match pipeline.decode_frame(frame, &set) {
                    Ok(theta) => frames.push(JointsRecord { t: frame[0].t, theta }),
                    Err(e) => eprintln!("skipped: {e}"),
                }
            }
            emit_jsonl(out, &frames)
        }
        Command::Fk { input } => {
            let frames: Vec<JointsRecord> = load(&input)?;
            let model = load_model(&config.model.hand).map_err(invalid)?;
            let mut poses = Vec::new();
            for f in &frames {
                for p in forward_kinematics(&model, &f.theta).map_err(invalid)? {
                    let q = p.orientation.quaternion();
                    poses.push(PoseRecord {
                        t: f.t,
                        finger: p.finger_id,
                        p: p.position.into(),
                        q: [q.w, q.i, q.j, q.k],
                    });
                }
            }
            emit_jsonl(out, &poses)
        }
        Command::Retarget { input } => {
            let frames: Vec<JointsRecord> = load(&input)?;
            let pipeline = Pipeline::new(&config).map_err(invalid)?;
            let mut last = pipeline.hand_home();
            let mut results = Vec::new();
            for f in &frames {
                match pipeline.retarget_hand(&f.theta, &last) {
                    Ok(r) => {
                        results.push(ResultRecord::new(f.t, &r));
                        last = r.theta;
                    }
                    Err(e) => eprintln!("skipped t={}: {e}", f.t),
                }
            }
            emit_jsonl(out, &results)
        }
        Command::Map {
            input,
            mode,
            sensor,
        } => {
            let mut config = config;
            if let Some(m) = mode {
                config.tactile.mode = match m {
                    Mode::Shape => MappingMode::Shape,
                    Mode::Pressure => MappingMode::Pressure,
                };
            }
            if let Some(s) = sensor {
                config.replay.tactile_sensor = s;
            }
            let frames: Vec<TactileRecord> = load(&input)?;
            let pipeline = Pipeline::new(&config).map_err(invalid)?;
            let mut patterns = Vec::new();
            for f in &frames {
                match pipeline.map_tactile(f) {
                    Ok(pattern) => patterns.push(PatternRecord {
                        t: f.t,
                        finger: f.finger,
                        pattern,
                    }),
                    Err(e) => eprintln!("skipped t={} finger {}: {e}", f.t, f.finger),
                }
            }
            emit_jsonl(out, &patterns)
        }
        Command::Encode { input, dump } => {
            if dump {
                let mut bytes = Vec::new();
                fs::File::open(&input)
                    .and_then(|mut f| f.read_to_end(&mut bytes))
                    .map_err(|e| runtime(format!("{}: {e}", input.display())))?;
                let streams = actuator::parse_tagf(&bytes).map_err(invalid)?;
                let rows: Vec<HexRecord> = streams
                    .iter()
                    .map(|s| HexRecord {
                        module_count: s.module_count,
                        hex: s.to_hex(),
                    })
                    .collect();
                return emit_jsonl(out, &rows);
            }
            let records: Vec<PatternRecord> = load(&input)?;
            let mut bytes = Vec::new();
            for group in records.chunk_by(|a, b| a.t == b.t) {
                let mut modules = vec![TaxelPattern::neutral(); 5];
                for p in group {
                    *modules.get_mut(p.finger).ok_or_else(|| {
                        invalid(format!("finger {} out of range at t={}", p.finger, p.t))
                    })? = p.pattern;
                }
                let stream = encode_patterns(&modules).map_err(invalid)?;
                bytes.extend(stream.to_record().map_err(invalid)?);
            }
            emit(out, &bytes)
        }
        Command::Scan { input } => {
            let plants: Vec<TactileRecord> = load(&input)?;
            let cfg = config.scan.config();
            let mut frames = Vec::new();
            for p in &plants {
                let m = ResistiveMatrix::new(p.rows, p.cols, p.values.clone()).map_err(invalid)?;
                let r = full_scan(&m, &cfg, config.scan.k).map_err(invalid)?;
                frames.push(ScanRecord {
                    frame: TactileRecord {
                        t: p.t,
                        finger: p.finger,
                        rows: p.rows,
                        cols: p.cols,
                        values: r.forces.values,
                    },
                    saturated: r.saturated,
                });
            }
            emit_jsonl(out, &frames)
        }
        Command::Replay {
            mag,
            calibration,
            tactile,
            wrist,
        } => {
            let dir = out
                .clone()
                .ok_or_else(|| invalid("replay requires --out <directory>"))?;
            let mut session = ReplaySession::new(config, dir).source("mag", mag);
            for (name, path) in [("calibration", calibration), ("tactile", tactile), ("wrist", wrist)] {
                if let Some(p) = path {
                    session = session.source(name, p);
                }
            }
            let stats = session.run().map_err(|e| {
                if e.is_validation() {
                    invalid(e)
                } else {
                    runtime(e)
                }
            })?;
            let text = serde_json::to_string_pretty(stats).map_err(runtime)?;
            println!("{text}");
            Ok(())
        }
        Command::Bench {
            workload,
            count,
            duration,
        } => {
            let options = BenchOptions {
                count,
                duration_s: duration,
                seed: cli.seed,
            };
            let report = bench::run(&config, &workload, &options).map_err(|e| match e {
                bench::BenchError::UnknownWorkload(_) | bench::BenchError::NoArm => invalid(e),
                bench::BenchError::Replay(r) if r.is_validation() => invalid(r),
                other => runtime(other),
            })?;
            emit_json(out, &report)
        }
        Command::Stats {
            input,
            drift_window,
            rate,
            histogram,
            bins,
        } => {
            let values = read_file(&input)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .enumerate()
                .map(|(i, l)| {
                    l.parse::<f64>()
                        .map_err(|e| invalid(format!("line {}: {e}", i + 1)))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if let Some(path) = histogram {
                let csv = histogram_csv(&values, bins).map_err(invalid)?;
                fs::write(&path, csv).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            }
            match drift_window {
                Some(w) => emit_json(out, &drift_report(&values, rate, w).map_err(invalid)?),
                None => emit_json(out, &error_stats(&values).map_err(invalid)?),
            }
        }
        Command::Synth { duration, noise } => {
            let dir = out
                .clone()
                .ok_or_else(|| invalid("synth requires --out <directory>"))?;
            let model = load_model(&config.model.hand).map_err(invalid)?;
            let log = generate(
                &model,
                &SynthOptions {
                    duration_s: duration,
                    glove_rate_hz: config.replay.glove_rate_hz,
                    tracker_rate_hz: config.replay.tracker_rate_hz,
                    noise_fraction: noise,
                    seed: cli.seed,
                    ..Default::default()
                },
            )
            .map_err(invalid)?;
            fs::create_dir_all(&dir).map_err(runtime)?;
            io::save_jsonl(&dir.join("mag.jsonl"), &log.mag).map_err(io_failure)?;
            io::save_jsonl(&dir.join("tactile.jsonl"), &log.tactile).map_err(io_failure)?;
            io::save_jsonl(&dir.join("wrist.jsonl"), &log.wrist).map_err(io_failure)?;
            let truth: Vec<JointsRecord> = log
                .truth
                .iter()
                .enumerate()
                .map(|(i, theta)| JointsRecord {
                    t: i as f64 / config.replay.glove_rate_hz,
                    theta: theta.clone(),
                })
                .collect();
            io::save_jsonl(&dir.join("truth.jsonl"), &truth).map_err(io_failure)?;
            fs::write(
                dir.join("calibration.toml"),
                log.calibration.to_toml().map_err(runtime)?,
            )
            .map_err(runtime)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
