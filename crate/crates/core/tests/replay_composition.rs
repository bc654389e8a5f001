use std::fs;

use glove_core::actuator::encode_patterns;
use glove_core::io::{save_jsonl, MagRecord, TactileRecord};
use glove_core::kinematics::{forward_kinematics, scale_targets, Kinematics};
use glove_core::mag::{decode_angle, JOINT_COUNT};
use glove_core::replay::{Pipeline, ReplayInputs, ReplayOutputs, ReplaySession, ReplayStats};
use glove_core::retarget::{opposition_targets, solve_arm_ik, solve_hand_retarget, wrist_target};
use glove_core::synth::{generate, SynthOptions, SyntheticLog};
use glove_core::tactile::{normalize_grid, peak_pressure, pressure_map, shape_map, MappingMode};
use glove_core::{HandModel, PipelineConfig, TaxelPattern};

fn log(duration_s: f64) -> SyntheticLog {
    generate(
        &HandModel::default_model(),
        &SynthOptions {
            duration_s,
            ..Default::default()
        },
    )
    .unwrap()
}

fn inputs(log: &SyntheticLog) -> ReplayInputs {
    ReplayInputs {
        mag: log.mag.clone(),
        calibration: Some(log.calibration.clone()),
        tactile: log.tactile.clone(),
        wrist: log.wrist.clone(),
    }
}

fn run(config: &PipelineConfig, inputs: &ReplayInputs) -> (ReplayOutputs, ReplayStats) {
    Pipeline::new(config).unwrap().run(inputs).unwrap()
}

#[test]
fn sampled_records_match_manual_composition() {
    let config = PipelineConfig::bundled();
    let log = log(60.0);
    let (out, stats) = run(&config, &inputs(&log));
    let frames: Vec<&[MagRecord]> = log.mag.chunks(JOINT_COUNT).collect();
    assert_eq!(out.joints.len(), frames.len());
    assert_eq!(out.hand.len(), frames.len());
    assert_eq!(out.arm.len(), frames.len());
    assert!(stats.stages.iter().all(|s| s.skipped == 0));

    let hand = HandModel::default_model();
    let arm = Kinematics::from_doc(config.model.arm.as_ref().unwrap()).unwrap();
    let cfg = &config.retarget;
    let arm_zero = arm.clamp(&vec![0.0; arm.dof()]);
    let robot_init = arm.chain_state(0, &arm_zero).tip;
    let held = |t: f64| log.wrist.iter().take_while(|w| w.t <= t).last().unwrap().isometry();
    let wrist_init = held(frames[0][0].t);

    for k in 0..100 {
        let i = k * frames.len() / 100;
        let frame = frames[i];
        let t = frame[0].t;

        let mut theta = vec![0.0; JOINT_COUNT];
        for r in frame {
            theta[r.joint] =
                decode_angle(r.joint, &r.sample(), log.calibration.get(r.joint).unwrap())
                    .unwrap()
                    .theta;
        }
        assert_eq!(out.joints[i].t, t);
        assert_eq!(out.joints[i].theta, theta, "decode at frame {i}");

        let poses = forward_kinematics(&hand, &theta).unwrap();
        let targets = scale_targets(&poses, &hand.default_lambdas()).unwrap();
        let opp = opposition_targets(&targets);
        let warm = if i == 0 {
            hand.clamp(&[0.0; JOINT_COUNT])
        } else {
            out.hand[i - 1].theta.clone()
        };
        let r = solve_hand_retarget(&targets, &warm, &opp, cfg, &hand).unwrap();
        assert_eq!(out.hand[i].theta, r.theta, "hand at frame {i}");
        assert_eq!(out.hand[i].cost, r.cost);
        assert_eq!(out.hand[i].iters, r.iterations);

        let target = wrist_target(&held(t), &wrist_init, &robot_init, cfg.wrist_lambda);
        let warm = if i == 0 { arm_zero.clone() } else { out.arm[i - 1].theta.clone() };
        let r = solve_arm_ik(&target, &warm, &arm, cfg).unwrap();
        assert_eq!(out.arm[i].theta, r.theta, "arm at frame {i}");
    }

    let sensor = config.tactile.sensor(&config.replay.tactile_sensor).unwrap();
    let map = |rec: &TactileRecord| -> TaxelPattern {
        let norm = normalize_grid(&rec.grid(), sensor.floor, sensor.ceiling).unwrap();
        match config.tactile.mode {
            MappingMode::Shape => {
                shape_map(&norm, &config.tactile.layout, config.tactile.activation_threshold)
            }
            MappingMode::Pressure => pressure_map(
                peak_pressure(&norm),
                &config.tactile.thresholds,
                &config.tactile.layout,
            )
            .unwrap(),
        }
    };
    assert_eq!(out.patterns.len(), log.tactile.len());
    for k in 0..100 {
        let i = k * log.tactile.len() / 100;
        assert_eq!(out.patterns[i].pattern, map(&log.tactile[i]), "pattern {i}");
        assert_eq!(out.patterns[i].t, log.tactile[i].t);
    }

    let groups: Vec<&[TactileRecord]> = log.tactile.chunk_by(|a, b| a.t == b.t).collect();
    assert_eq!(out.feedback.len(), groups.len());
    for k in 0..100 {
        let i = k * groups.len() / 100;
        let mut modules = [TaxelPattern::neutral(); 5];
        for rec in groups[i] {
            modules[rec.finger] = map(rec);
        }
        assert_eq!(out.feedback[i].0, groups[i][0].t);
        assert_eq!(out.feedback[i].1, encode_patterns(&modules).unwrap());
    }
}

#[test]
fn outputs_preserve_input_order() {
    let log = log(5.0);
    let (out, _) = run(&PipelineConfig::bundled(), &inputs(&log));
    let frame_times: Vec<f64> = log.mag.chunks(JOINT_COUNT).map(|f| f[0].t).collect();
    let joint_times: Vec<f64> = out.joints.iter().map(|r| r.t).collect();
    assert_eq!(joint_times, frame_times);
    assert!(out.hand.windows(2).all(|w| w[0].t <= w[1].t));
    assert!(out.arm.windows(2).all(|w| w[0].t <= w[1].t));
    let tactile_times: Vec<f64> = log.tactile.iter().map(|r| r.t).collect();
    let pattern_times: Vec<f64> = out.patterns.iter().map(|r| r.t).collect();
    assert_eq!(pattern_times, tactile_times);
    assert!(out.feedback.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn skipped_records_are_counted() {
    let mut log = log(2.0);
    log.mag[3 * JOINT_COUNT + 2].bx = f64::NAN;
    log.mag.remove(7 * JOINT_COUNT);
    log.tactile[4].values.pop();
    log.tactile[9].finger = 7;
    let (out, stats) = run(&PipelineConfig::bundled(), &inputs(&log));
    for s in &stats.stages {
        assert_eq!(s.input, s.output + s.skipped, "{}", s.name);
    }
    let decode = stats.stage("decode").unwrap();
    assert_eq!(decode.skipped, 2);
    assert_eq!(out.joints.len(), decode.output);
    assert_eq!(stats.stage("hand").unwrap().input, decode.output);
    let map = stats.stage("map").unwrap();
    assert_eq!(map.skipped, 2);
    assert_eq!(out.patterns.len(), map.output);
}

#[test]
fn repeated_sessions_write_identical_files() {
    let log = log(3.0);
    let src = tempfile::tempdir().unwrap();
    save_jsonl(&src.path().join("mag.jsonl"), &log.mag).unwrap();
    save_jsonl(&src.path().join("tactile.jsonl"), &log.tactile).unwrap();
    save_jsonl(&src.path().join("wrist.jsonl"), &log.wrist).unwrap();
    let calib = src.path().join("calibration.toml");
    fs::write(&calib, log.calibration.to_toml().unwrap()).unwrap();

    let mut dirs = Vec::new();
    for _ in 0..2 {
        let out = tempfile::tempdir().unwrap();
        let mut session = ReplaySession::new(PipelineConfig::bundled(), out.path())
            .source("mag", src.path().join("mag.jsonl"))
            .source("calibration", &calib)
            .source("tactile", src.path().join("tactile.jsonl"))
            .source("wrist", src.path().join("wrist.jsonl"));
        session.run().unwrap();
        assert_eq!(session.outputs.len(), 6);
        dirs.push(out);
    }
    for file in ["joints.jsonl", "hand.jsonl", "arm.jsonl", "patterns.jsonl", "feedback.tagf"] {
        let a = fs::read(dirs[0].path().join(file)).unwrap();
        let b = fs::read(dirs[1].path().join(file)).unwrap();
        assert!(!a.is_empty(), "{file} empty");
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn out_of_range_joint_names_line() {
    let mut log = log(0.1);
    log.mag[5].joint = 21;
    let err = Pipeline::new(&PipelineConfig::bundled())
        .unwrap()
        .run(&inputs(&log))
        .unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("line 6"), "{err}");
}
