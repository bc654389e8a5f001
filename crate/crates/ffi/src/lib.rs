//! C ABI over `glove-core`.
//!
//! Objects are opaque handles created by `*_new` functions and released by
//! the matching `*_free`. Every fallible function returns a [`GloveStatus`];
//! on failure [`glove_last_error`] describes the most recent error on the
//! calling thread. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use glove_core::actuator::{decode_patterns, encode_patterns, parse_tagf};
use glove_core::config::PipelineConfig;
use glove_core::kinematics::{forward_kinematics, load_model, HandModel};
use glove_core::mag::{decode_angle, CalibrationSet, CalibrationState, MagSample, JOINT_COUNT};
use glove_core::replay::Pipeline;
use glove_core::scan::{divider_voltage, recover_resistance, ScanConfig};
use glove_core::tactile::{pressure_map, shape_map, SensorGrid, TaxelPattern, TaxelState, TAXEL_COUNT};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GloveStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Configuration or model document rejected.
    Config = 3,
    /// Reading could not be decoded.
    Decode = 4,
    Solver = 5,
    Codec = 6,
    /// Output buffer too small; the required size was written.
    BufferTooSmall = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

fn fail(status: GloveStatus, message: impl ToString) -> GloveStatus {
    set_error(message.to_string());
    status
}

fn guard(f: impl FnOnce() -> GloveStatus) -> GloveStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(GloveStatus::Panic, "internal panic"),
    }
}

/// Message for the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn glove_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn glove_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn config_from(text: *const c_char) -> Result<PipelineConfig, GloveStatus> {
    if text.is_null() {
        return Ok(PipelineConfig::bundled());
    }
    let s = CStr::from_ptr(text)
        .to_str()
        .map_err(|e| fail(GloveStatus::InvalidArgument, e))?;
    PipelineConfig::from_toml(s).map_err(|e| fail(GloveStatus::Config, e))
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], GloveStatus> {
    if p.is_null() {
        Err(fail(GloveStatus::NullPointer, "null input buffer"))
    } else {
        Ok(std::slice::from_raw_parts(p, n))
    }
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize) -> Result<&'a mut [T], GloveStatus> {
    if p.is_null() {
        Err(fail(GloveStatus::NullPointer, "null output buffer"))
    } else {
        Ok(std::slice::from_raw_parts_mut(p, n))
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Opaque 21-joint hand model.
pub struct GloveHandModel {
    model: HandModel,
}

/// Creates the hand model from a TOML configuration, or the bundled
/// default when `config_toml` is null.
///
/// # Safety
/// `config_toml` is null or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn glove_hand_model_new(
    config_toml: *const c_char,
    out: *mut *mut GloveHandModel,
) -> GloveStatus {
    guard(|| {
        if out.is_null() {
            return fail(GloveStatus::NullPointer, "null output handle");
        }
        let config = tri!(config_from(config_toml));
        let model = tri!(load_model(&config.model.hand).map_err(|e| fail(GloveStatus::Config, e)));
        *out = Box::into_raw(Box::new(GloveHandModel { model }));
        GloveStatus::Ok
    })
}

/// # Safety
/// `model` is null or a handle from [`glove_hand_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn glove_hand_model_free(model: *mut GloveHandModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of joints, 0 for a null handle.
///
/// # Safety
/// `model` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glove_hand_model_dof(model: *const GloveHandModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.dof())
}

/// Fingertip poses for `theta` (`dof` values). Writes 5 positions as
/// `[x, y, z]` triples and 5 orientations as `[w, x, y, z]` quaternions.
///
/// # Safety
/// `theta` holds `dof` values; `positions` holds 15 and `quaternions` 20.
#[no_mangle]
pub unsafe extern "C" fn glove_hand_model_forward(
    model: *const GloveHandModel,
    theta: *const f64,
    dof: usize,
    positions: *mut f64,
    quaternions: *mut f64,
) -> GloveStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(GloveStatus::NullPointer, "null model");
        };
        let theta = tri!(slice(theta, dof));
        let poses = tri!(
            forward_kinematics(&m.model, theta).map_err(|e| fail(GloveStatus::InvalidArgument, e))
        );
        let p = tri!(slice_mut(positions, 3 * poses.len()));
        let q = tri!(slice_mut(quaternions, 4 * poses.len()));
        for (i, pose) in poses.iter().enumerate() {
            p[3 * i..3 * i + 3].copy_from_slice(pose.position.as_slice());
            let quat = pose.orientation.quaternion();
            q[4 * i..4 * i + 4].copy_from_slice(&[quat.w, quat.i, quat.j, quat.k]);
        }
        GloveStatus::Ok
    })
}

/// Opaque per-joint angle decoder.
pub struct GloveDecoder {
    calibration: CalibrationSet,
}

/// Creates a decoder from a calibration TOML document, or an empty one
/// when `calibration_toml` is null.
///
/// # Safety
/// `calibration_toml` is null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn glove_decoder_new(
    calibration_toml: *const c_char,
    out: *mut *mut GloveDecoder,
) -> GloveStatus {
    guard(|| {
        if out.is_null() {
            return fail(GloveStatus::NullPointer, "null output handle");
        }
        let calibration = if calibration_toml.is_null() {
            CalibrationSet::default()
        } else {
            let s = tri!(CStr::from_ptr(calibration_toml)
                .to_str()
                .map_err(|e| fail(GloveStatus::InvalidArgument, e)));
            tri!(CalibrationSet::from_toml(s).map_err(|e| fail(GloveStatus::Config, e)))
        };
        *out = Box::into_raw(Box::new(GloveDecoder { calibration }));
        GloveStatus::Ok
    })
}

/// # Safety
/// `decoder` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glove_decoder_free(decoder: *mut GloveDecoder) {
    if !decoder.is_null() {
        drop(Box::from_raw(decoder));
    }
}

/// Sets one joint's offsets and field amplitude.
///
/// # Safety
/// `decoder` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn glove_decoder_set_joint(
    decoder: *mut GloveDecoder,
    joint: usize,
    ox: f64,
    oy: f64,
    b0: f64,
) -> GloveStatus {
    guard(|| {
        let Some(d) = decoder.as_mut() else {
            return fail(GloveStatus::NullPointer, "null decoder");
        };
        if joint >= JOINT_COUNT {
            return fail(GloveStatus::InvalidArgument, format!("joint {joint} out of range"));
        }
        if !(b0 > 0.0 && b0.is_finite() && ox.is_finite() && oy.is_finite()) {
            return fail(GloveStatus::InvalidArgument, "offsets must be finite and b0 positive");
        }
        d.calibration
            .insert(joint, CalibrationState::from_parameters(ox, oy, b0));
        GloveStatus::Ok
    })
}

/// Joint angle in `(-pi, pi]` from one reading.
///
/// # Safety
/// `decoder` is a live handle; `theta` is writable.
#[no_mangle]
pub unsafe extern "C" fn glove_decoder_decode(
    decoder: *const GloveDecoder,
    joint: usize,
    bx: f64,
    by: f64,
    theta: *mut f64,
) -> GloveStatus {
    guard(|| {
        let Some(d) = decoder.as_ref() else {
            return fail(GloveStatus::NullPointer, "null decoder");
        };
        if theta.is_null() {
            return fail(GloveStatus::NullPointer, "null output");
        }
        let Some(calib) = d.calibration.get(joint) else {
            return fail(GloveStatus::InvalidArgument, format!("joint {joint} not calibrated"));
        };
        let a = tri!(decode_angle(joint, &MagSample::new(bx, by, 0.0), calib)
            .map_err(|e| fail(GloveStatus::Decode, e)));
        *theta = a.theta;
        GloveStatus::Ok
    })
}

/// Opaque warm-started hand retargeter.
pub struct GloveRetargeter {
    pipeline: Pipeline,
    last: Vec<f64>,
}

/// Creates a retargeter from a TOML configuration, or the bundled default
/// when `config_toml` is null.
///
/// # Safety
/// `config_toml` is null or NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn glove_retargeter_new(
    config_toml: *const c_char,
    out: *mut *mut GloveRetargeter,
) -> GloveStatus {
    guard(|| {
        if out.is_null() {
            return fail(GloveStatus::NullPointer, "null output handle");
        }
        let config = tri!(config_from(config_toml));
        let pipeline = tri!(Pipeline::new(&config).map_err(|e| fail(GloveStatus::Config, e)));
        let last = pipeline.hand_home();
        *out = Box::into_raw(Box::new(GloveRetargeter { pipeline, last }));
        GloveStatus::Ok
    })
}

/// # Safety
/// `retargeter` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn glove_retargeter_free(retargeter: *mut GloveRetargeter) {
    if !retargeter.is_null() {
        drop(Box::from_raw(retargeter));
    }
}

/// Resets the warm start to the home configuration.
///
/// # Safety
/// `retargeter` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn glove_retargeter_reset(retargeter: *mut GloveRetargeter) -> GloveStatus {
    guard(|| {
        let Some(r) = retargeter.as_mut() else {
            return fail(GloveStatus::NullPointer, "null retargeter");
        };
        r.last = r.pipeline.hand_home();
        GloveStatus::Ok
    })
}

/// Robot joint angles for operator joint angles `human` (`dof` values).
/// The result becomes the next warm start. `cost`, `iterations` and
/// `converged` may be null.
///
/// # Safety
/// `human` holds and `robot` receives `dof` values.
#[no_mangle]
pub unsafe extern "C" fn glove_retargeter_solve(
    retargeter: *mut GloveRetargeter,
    human: *const f64,
    dof: usize,
    robot: *mut f64,
    cost: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> GloveStatus {
    guard(|| {
        let Some(r) = retargeter.as_mut() else {
            return fail(GloveStatus::NullPointer, "null retargeter");
        };
        if dof != r.last.len() {
            return fail(
                GloveStatus::InvalidArgument,
                format!("expected {} joints, found {dof}", r.last.len()),
            );
        }
        let human = tri!(slice(human, dof));
        let robot = tri!(slice_mut(robot, dof));
        let result = tri!(r
            .pipeline
            .retarget_hand(human, &r.last)
            .map_err(|e| fail(GloveStatus::Solver, e)));
        robot.copy_from_slice(&result.theta);
        if let Some(c) = cost.as_mut() {
            *c = result.cost;
        }
        if let Some(i) = iterations.as_mut() {
            *i = result.iterations;
        }
        if let Some(c) = converged.as_mut() {
            *c = result.converged;
        }
        r.last = result.theta;
        GloveStatus::Ok
    })
}

fn state_from_code(code: i8) -> Result<TaxelState, GloveStatus> {
    match code {
        1 => Ok(TaxelState::Protrude),
        0 => Ok(TaxelState::Neutral),
        -1 => Ok(TaxelState::Retract),
        other => Err(fail(
            GloveStatus::InvalidArgument,
            format!("taxel state {other} not in -1, 0, 1"),
        )),
    }
}

fn state_code(s: TaxelState) -> i8 {
    match s {
        TaxelState::Protrude => 1,
        TaxelState::Neutral => 0,
        TaxelState::Retract => -1,
    }
}

/// Shape-mode mapping of a normalized `rows` x `cols` grid onto the bundled
/// 32-taxel layout. Writes 32 states: 1 protrude, 0 neutral.
///
/// # Safety
/// `values` holds `rows * cols` values; `states` receives 32.
#[no_mangle]
pub unsafe extern "C" fn glove_map_shape(
    values: *const f64,
    rows: usize,
    cols: usize,
    threshold: f64,
    states: *mut i8,
) -> GloveStatus {
    guard(|| {
        let values = tri!(slice(values, rows.saturating_mul(cols)));
        let out = tri!(slice_mut(states, TAXEL_COUNT));
        let grid = tri!(SensorGrid::new(rows, cols, values.to_vec())
            .map_err(|e| fail(GloveStatus::InvalidArgument, e)));
        let config = PipelineConfig::bundled();
        let pattern = shape_map(&grid, &config.tactile.layout, threshold);
        for (o, s) in out.iter_mut().zip(pattern.states) {
            *o = state_code(s);
        }
        GloveStatus::Ok
    })
}

/// Pressure-mode mapping of a normalized peak pressure with the bundled
/// thresholds. Writes 32 states.
///
/// # Safety
/// `states` receives 32 values.
#[no_mangle]
pub unsafe extern "C" fn glove_map_pressure(p_max: f64, states: *mut i8) -> GloveStatus {
    guard(|| {
        let out = tri!(slice_mut(states, TAXEL_COUNT));
        let config = PipelineConfig::bundled();
        let pattern = tri!(pressure_map(p_max, &config.tactile.thresholds, &config.tactile.layout)
            .map_err(|e| fail(GloveStatus::InvalidArgument, e)));
        for (o, s) in out.iter_mut().zip(pattern.states) {
            *o = state_code(s);
        }
        GloveStatus::Ok
    })
}

/// Encodes `modules` patterns of 32 states each (module `i` at offset
/// `32 * i`) into one `TAGF` record. `written` receives the record length;
/// when `capacity` is too small nothing else is written and
/// [`GloveStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `states` holds `32 * modules` values; `out` has `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn glove_encode_record(
    states: *const i8,
    modules: usize,
    out: *mut u8,
    capacity: usize,
    written: *mut usize,
) -> GloveStatus {
    guard(|| {
        if written.is_null() {
            return fail(GloveStatus::NullPointer, "null length output");
        }
        let codes = tri!(slice(states, TAXEL_COUNT.saturating_mul(modules)));
        let mut patterns = Vec::with_capacity(modules);
        for chunk in codes.chunks(TAXEL_COUNT) {
            let s: Vec<TaxelState> = tri!(chunk.iter().map(|&c| state_from_code(c)).collect());
            patterns.push(TaxelPattern::from_states(&s).expect("chunk of 32"));
        }
        let record = tri!(encode_patterns(&patterns)
            .and_then(|s| s.to_record())
            .map_err(|e| fail(GloveStatus::Codec, e)));
        *written = record.len();
        if capacity < record.len() {
            return fail(GloveStatus::BufferTooSmall, "output buffer too small");
        }
        let dst = tri!(slice_mut(out, record.len()));
        dst.copy_from_slice(&record);
        GloveStatus::Ok
    })
}

/// Decodes one `TAGF` record into 32 states per module. `modules`
/// receives the module count; `capacity` is the size of `states`.
///
/// # Safety
/// `record` has `len` bytes; `states` has `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn glove_decode_record(
    record: *const u8,
    len: usize,
    states: *mut i8,
    capacity: usize,
    modules: *mut usize,
) -> GloveStatus {
    guard(|| {
        if modules.is_null() {
            return fail(GloveStatus::NullPointer, "null module count output");
        }
        let bytes = tri!(slice(record, len));
        let streams = tri!(parse_tagf(bytes).map_err(|e| fail(GloveStatus::Codec, e)));
        let [stream] = streams.as_slice() else {
            return fail(
                GloveStatus::Codec,
                format!("expected one record, found {}", streams.len()),
            );
        };
        let patterns = tri!(decode_patterns(stream).map_err(|e| fail(GloveStatus::Codec, e)));
        *modules = patterns.len();
        if capacity < patterns.len() * TAXEL_COUNT {
            return fail(GloveStatus::BufferTooSmall, "output buffer too small");
        }
        let out = tri!(slice_mut(states, patterns.len() * TAXEL_COUNT));
        for (o, s) in out.iter_mut().zip(patterns.iter().flat_map(|p| p.states)) {
            *o = state_code(s);
        }
        GloveStatus::Ok
    })
}

/// Divider voltage for taxel resistance `r`, quantized to `adc_bits`
/// (0 disables quantization).
#[no_mangle]
pub extern "C" fn glove_divider_voltage(r: f64, vcc: f64, r_ref: f64, adc_bits: u32) -> f64 {
    divider_voltage(r, &ScanConfig { vcc, r_ref, adc_bits })
}

/// Taxel resistance from a divider reading.
///
/// # Safety
/// `r` is writable.
#[no_mangle]
pub unsafe extern "C" fn glove_recover_resistance(v: f64, vcc: f64, r_ref: f64, r: *mut f64) -> GloveStatus {
    guard(|| {
        if r.is_null() {
            return fail(GloveStatus::NullPointer, "null output");
        }
        let cfg = ScanConfig {
            vcc,
            r_ref,
            adc_bits: 0,
        };
        *r = tri!(recover_resistance(v, &cfg).map_err(|e| fail(GloveStatus::InvalidArgument, e)));
        GloveStatus::Ok
    })
}
