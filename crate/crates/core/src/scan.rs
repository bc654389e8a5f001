//! Row-column readout of a piezoresistive taxel matrix.
//!
//! One row and one column are selected through two 8-channel multiplexers
//! and the selected taxel is read through a voltage divider against a
//! reference resistor. Force is taken as inversely proportional to
//! resistance. Crosstalk through parallel paths is not modeled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tactile::SensorGrid;

pub const MUX_CHANNELS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("{rows}x{cols} matrix exceeds multiplexer channels ({MUX_CHANNELS})")]
    TooLarge { rows: usize, cols: usize },
    #[error("matrix must have at least one row and column")]
    Empty,
    #[error("saturated reading: {0} V")]
    Saturated(f64),
    #[error("resistance at ({row}, {col}) must be positive and finite, got {value}")]
    BadResistance { row: usize, col: usize, value: f64 },
    #[error("expected {expected} resistances, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("invalid scan configuration: {0}")]
    Config(String),
}

/// Divider and ADC parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub vcc: f64,
    pub r_ref: f64,
    /// ADC depth over `[0, vcc]`; zero disables quantization.
    pub adc_bits: u32,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            vcc: 3.3,
            r_ref: 10_000.0,
            adc_bits: 12,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        if !(self.vcc > 0.0 && self.vcc.is_finite()) {
            return Err(ScanError::Config("vcc must be positive".into()));
        }
        if !(self.r_ref > 0.0 && self.r_ref.is_finite()) {
            return Err(ScanError::Config("r_ref must be positive".into()));
        }
        if self.adc_bits > 32 {
            return Err(ScanError::Config("adc_bits must be at most 32".into()));
        }
        Ok(())
    }

    /// Voltage per ADC code, zero without quantization.
    pub fn step(&self) -> f64 {
        if self.adc_bits == 0 {
            0.0
        } else {
            self.vcc / 2f64.powi(self.adc_bits as i32)
        }
    }

    pub fn unquantized(&self) -> Self {
        Self {
            adc_bits: 0,
            ..*self
        }
    }
}

/// `[scan]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanSection {
    pub rows: usize,
    pub cols: usize,
    pub vcc: f64,
    pub r_ref: f64,
    pub adc_bits: u32,
    /// Material constant in ohm-newtons.
    pub k: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        let c = ScanConfig::default();
        Self {
            rows: 7,
            cols: 6,
            vcc: c.vcc,
            r_ref: c.r_ref,
            adc_bits: c.adc_bits,
            k: 140_000.0,
        }
    }
}

impl ScanSection {
    pub fn config(&self) -> ScanConfig {
        ScanConfig {
            vcc: self.vcc,
            r_ref: self.r_ref,
            adc_bits: self.adc_bits,
        }
    }
}

/// Taxel resistances in ohms, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistiveMatrix {
    pub rows: usize,
    pub cols: usize,
    pub resistances: Vec<f64>,
}

impl ResistiveMatrix {
    pub fn new(rows: usize, cols: usize, resistances: Vec<f64>) -> Result<Self, ScanError> {
        let m = Self {
            rows,
            cols,
            resistances,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(rows: usize, cols: usize, r: f64) -> Result<Self, ScanError> {
        Self::new(rows, cols, vec![r; rows * cols])
    }

    /// Matrix whose taxels would read `forces` under `f = k / r`.
    pub fn from_forces(grid: &SensorGrid, k: f64) -> Result<Self, ScanError> {
        Self::new(
            grid.rows,
            grid.cols,
            grid.values.iter().map(|f| k / f).collect(),
        )
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ScanError::Empty);
        }
        if self.resistances.len() != self.rows * self.cols {
            return Err(ScanError::Shape {
                expected: self.rows * self.cols,
                found: self.resistances.len(),
            });
        }
        for (i, &value) in self.resistances.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScanError::BadResistance {
                    row: i / self.cols,
                    col: i % self.cols,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.resistances[row * self.cols + col]
    }
}

/// Row-major select order.
pub fn scan_schedule(rows: usize, cols: usize) -> Result<Vec<(usize, usize)>, ScanError> {
    if rows == 0 || cols == 0 {
        return Err(ScanError::Empty);
    }
    if rows > MUX_CHANNELS || cols > MUX_CHANNELS {
        return Err(ScanError::TooLarge { rows, cols });
    }
    Ok((0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .collect())
}

/// Divider output for taxel resistance `r`, as read by the ADC.
pub fn divider_voltage(r: f64, cfg: &ScanConfig) -> f64 {
    let v = cfg.vcc * cfg.r_ref / (r + cfg.r_ref);
    if cfg.adc_bits == 0 {
        return v;
    }
    let step = cfg.step();
    let max_code = 2f64.powi(cfg.adc_bits as i32) - 1.0;
    (v / step).round().clamp(0.0, max_code) * step
}

pub fn recover_resistance(v: f64, cfg: &ScanConfig) -> Result<f64, ScanError> {
    if !(v > 0.0 && v < cfg.vcc) {
        return Err(ScanError::Saturated(v));
    }
    Ok(cfg.r_ref * (cfg.vcc - v) / v)
}

pub fn pressure_from_resistance(r: f64, k: f64) -> f64 {
    k / r
}

/// Force grid and per-cell saturation flags from one full scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub forces: SensorGrid,
    pub saturated: Vec<bool>,
}

impl ScanResult {
    pub fn saturated_count(&self) -> usize {
        self.saturated.iter().filter(|&&s| s).count()
    }
}

/// Reads every taxel in schedule order and converts to force. A reading at
/// either end of the ADC range is flagged as saturated: the bottom code reads
/// as zero force and the top code as the force one code below full scale.
pub fn full_scan(matrix: &ResistiveMatrix, cfg: &ScanConfig, k: f64) -> Result<ScanResult, ScanError> {
    cfg.validate()?;
    matrix.validate()?;
    let schedule = scan_schedule(matrix.rows, matrix.cols)?;
    let mut forces = SensorGrid::filled(matrix.rows, matrix.cols, 0.0);
    let mut saturated = vec![false; matrix.rows * matrix.cols];
    let (top, top_read) = if cfg.adc_bits == 0 {
        (cfg.vcc, cfg.vcc * (1.0 - f64::EPSILON))
    } else {
        let v = (2f64.powi(cfg.adc_bits as i32) - 1.0) * cfg.step();
        (v, v)
    };
    let top_force = pressure_from_resistance(recover_resistance(top_read, cfg)?, k);
    for (row, col) in schedule {
        let v = divider_voltage(matrix.get(row, col), cfg);
        let cell = row * matrix.cols + col;
        let f = if v <= 0.0 {
            saturated[cell] = true;
            0.0
        } else if v >= top {
            saturated[cell] = true;
            top_force
        } else {
            pressure_from_resistance(recover_resistance(v, cfg)?, k)
        };
        forces.set(row, col, f);
    }
    Ok(ScanResult { forces, saturated })
}
