//! Robot tactile grids to 32-taxel feedback patterns.
//!
//! Two mappings are provided. Shape mode samples the normalized grid at every
//! taxel's coordinate with bilinear interpolation and protrudes the taxels
//! whose intensity reaches an activation threshold. Pressure mode ignores the
//! spatial layout of the contact and expands a centred ring of active taxels
//! (1, 7 or 19) as the normalized peak pressure crosses ascending thresholds.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of feedback taxels per fingertip module.
pub const TAXEL_COUNT: usize = 32;
/// Sizes of the nested pressure-mode rings.
pub const RING_SIZES: [usize; 3] = [1, 7, 19];

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TactileError {
    #[error("grid has {found} values, expected {rows}x{cols}")]
    GridShape {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("grid must have at least one row and column")]
    EmptyGrid,
    #[error("non-finite grid value at index {0}")]
    NonFinite(usize),
    #[error("normalization ceiling {ceiling} must exceed floor {floor}")]
    BadRange { floor: f64, ceiling: f64 },
    #[error("thresholds must be 3 strictly ascending values in (0, 1], got {0:?}")]
    BadThresholds(Vec<f64>),
    #[error("invalid taxel layout: {0}")]
    Layout(String),
    #[error("pattern must have {TAXEL_COUNT} entries, found {0}")]
    PatternLength(usize),
    #[error("unknown sensor {0:?}")]
    UnknownSensor(String),
}

/// A rectangular tactile image, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorGrid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<String>,
}

impl SensorGrid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, TactileError> {
        let grid = Self {
            rows,
            cols,
            values,
            sensor: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
            sensor: None,
        }
    }

    pub fn with_sensor(mut self, sensor: impl Into<String>) -> Self {
        self.sensor = Some(sensor.into());
        self
    }

    pub fn validate(&self) -> Result<(), TactileError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(TactileError::EmptyGrid);
        }
        if self.values.len() != self.rows * self.cols {
            return Err(TactileError::GridShape {
                rows: self.rows,
                cols: self.cols,
                found: self.values.len(),
            });
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(TactileError::NonFinite(i));
        }
        Ok(())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    /// Bilinear sample at unit-square coordinates `(u, v)`; `u` runs along
    /// columns and `v` along rows. Cell centres sit at half-cell insets, so
    /// node `(r, c)` lives at `((c + 0.5) / cols, (r + 0.5) / rows)`.
    /// Coordinates beyond the outermost centres clamp to the edge.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        let x = (u * self.cols as f64 - 0.5).clamp(0.0, (self.cols - 1) as f64);
        let y = (v * self.rows as f64 - 0.5).clamp(0.0, (self.rows - 1) as f64);
        let c0 = (x.floor() as usize).min(self.cols.saturating_sub(2));
        let r0 = (y.floor() as usize).min(self.rows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let fx = x - c0 as f64;
        let fy = y - r0 as f64;
        let top = self.get(r0, c0) * (1.0 - fx) + self.get(r0, c1) * fx;
        let bottom = self.get(r1, c0) * (1.0 - fx) + self.get(r1, c1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Clamps to `[floor, ceiling]` and maps affinely onto `[0, 1]`.
pub fn normalize_grid(grid: &SensorGrid, floor: f64, ceiling: f64) -> Result<SensorGrid, TactileError> {
    if !(ceiling > floor) || !floor.is_finite() || !ceiling.is_finite() {
        return Err(TactileError::BadRange { floor, ceiling });
    }
    grid.validate()?;
    let span = ceiling - floor;
    Ok(SensorGrid {
        values: grid
            .values
            .iter()
            .map(|v| (v.clamp(floor, ceiling) - floor) / span)
            .collect(),
        ..grid.clone()
    })
}

/// Maximum cell of a normalized grid.
pub fn peak_pressure(grid: &SensorGrid) -> f64 {
    grid.values.iter().copied().fold(0.0, f64::max)
}

/// Drive state of one feedback taxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TaxelState {
    Protrude,
    #[default]
    Neutral,
    Retract,
}

impl TaxelState {
    pub fn symbol(self) -> char {
        match self {
            TaxelState::Protrude => '+',
            TaxelState::Neutral => '0',
            TaxelState::Retract => '-',
        }
    }
}

/// Commands for the 32 taxels of one module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TaxelPattern {
    pub states: [TaxelState; TAXEL_COUNT],
}

impl TaxelPattern {
    pub fn neutral() -> Self {
        Self::default()
    }

    pub fn from_states(states: &[TaxelState]) -> Result<Self, TactileError> {
        let states: [TaxelState; TAXEL_COUNT] = states
            .try_into()
            .map_err(|_| TactileError::PatternLength(states.len()))?;
        Ok(Self { states })
    }

    /// Explicit clear command: every taxel retracts.
    pub fn clear() -> Self {
        Self {
            states: [TaxelState::Retract; TAXEL_COUNT],
        }
    }

    pub fn active(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == TaxelState::Protrude)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.states
            .iter()
            .filter(|s| **s == TaxelState::Protrude)
            .count()
    }

    /// Parses the 32-character `+`/`0`/`-` form.
    pub fn parse(text: &str) -> Result<Self, TactileError> {
        let states: Vec<TaxelState> = text
            .chars()
            .map(|c| match c {
                '+' => Ok(TaxelState::Protrude),
                '0' => Ok(TaxelState::Neutral),
                '-' => Ok(TaxelState::Retract),
                _ => Err(TactileError::PatternLength(text.chars().count())),
            })
            .collect::<Result<_, _>>()?;
        Self::from_states(&states)
    }
}

impl fmt::Display for TaxelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.states {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

impl Serialize for TaxelPattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TaxelPattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Taxel positions and the nested pressure-mode rings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxelLayout {
    /// `(u, v)` in the unit square; `u` across columns, `v` down rows.
    pub coords: Vec<[f64; 2]>,
    pub center: usize,
    pub ring7: Vec<usize>,
    pub ring19: Vec<usize>,
}

impl TaxelLayout {
    pub fn bundled() -> Self {
        crate::config::PipelineConfig::bundled().tactile.layout
    }

    /// Checks coordinate count, distinctness, central symmetry about
    /// `(0.5, 0.5)` and ring nesting.
    pub fn validate(&self) -> Result<(), TactileError> {
        let err = |m: String| Err(TactileError::Layout(m));
        if self.coords.len() != TAXEL_COUNT {
            return err(format!("{} coordinates, expected {TAXEL_COUNT}", self.coords.len()));
        }
        for (i, c) in self.coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&c[0]) || !(0.0..=1.0).contains(&c[1]) {
                return err(format!("taxel {i} outside the unit square"));
            }
            for (j, d) in self.coords.iter().enumerate().skip(i + 1) {
                if c == d {
                    return err(format!("taxels {i} and {j} coincide"));
                }
            }
            let mirrored = [1.0 - c[0], 1.0 - c[1]];
            let has_mirror = self.coords.iter().any(|d| {
                (d[0] - mirrored[0]).abs() < SYMMETRY_TOLERANCE
                    && (d[1] - mirrored[1]).abs() < SYMMETRY_TOLERANCE
            });
            if !has_mirror {
                return err(format!("taxel {i} has no centrally symmetric partner"));
            }
        }
        let rings = [vec![self.center], self.ring7.clone(), self.ring19.clone()];
        for (ring, size) in rings.iter().zip(RING_SIZES) {
            let mut sorted = ring.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != size || ring.len() != size {
                return err(format!("ring of size {size} has {} distinct taxels", sorted.len()));
            }
            if sorted.iter().any(|&k| k >= TAXEL_COUNT) {
                return err(format!("ring of size {size} references a missing taxel"));
            }
        }
        if !self.ring7.contains(&self.center) {
            return err("ring7 must contain the centre".into());
        }
        if !self.ring7.iter().all(|k| self.ring19.contains(k)) {
            return err("ring19 must contain ring7".into());
        }
        Ok(())
    }

    /// Active index set for ring level 0, 1 or 2.
    pub fn ring(&self, level: usize) -> &[usize] {
        match level {
            0 => std::slice::from_ref(&self.center),
            1 => &self.ring7,
            _ => &self.ring19,
        }
    }
}

/// Per-sensor normalization references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub rows: usize,
    pub cols: usize,
    pub floor: f64,
    pub ceiling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingMode {
    Shape,
    Pressure,
}

/// The `[tactile]` configuration section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileSection {
    pub mode: MappingMode,
    pub activation_threshold: f64,
    pub thresholds: Vec<f64>,
    pub layout: TaxelLayout,
    #[serde(default)]
    pub sensors: BTreeMap<String, SensorSpec>,
}

impl TactileSection {
    pub fn sensor(&self, name: &str) -> Result<&SensorSpec, TactileError> {
        self.sensors
            .get(name)
            .ok_or_else(|| TactileError::UnknownSensor(name.to_string()))
    }

    /// Normalizes a raw grid with the named sensor's references and applies
    /// the configured mapping.
    pub fn map_raw(&self, grid: &SensorGrid, sensor: &str) -> Result<TaxelPattern, TactileError> {
        let spec = self.sensor(sensor)?;
        let norm = normalize_grid(grid, spec.floor, spec.ceiling)?;
        match self.mode {
            MappingMode::Shape => Ok(shape_map(&norm, &self.layout, self.activation_threshold)),
            MappingMode::Pressure => {
                pressure_map(peak_pressure(&norm), &self.thresholds, &self.layout)
            }
        }
    }
}

/// Intensity at every taxel coordinate.
pub fn sample_taxels(grid: &SensorGrid, layout: &TaxelLayout) -> Vec<f64> {
    layout
        .coords
        .iter()
        .map(|c| grid.sample(c[0], c[1]))
        .collect()
}

/// Shape mode: protrude taxels whose interpolated intensity reaches
/// `activation_threshold`. Retraction is never commanded.
pub fn shape_map(grid: &SensorGrid, layout: &TaxelLayout, activation_threshold: f64) -> TaxelPattern {
    let mut pattern = TaxelPattern::neutral();
    for (state, value) in pattern.states.iter_mut().zip(sample_taxels(grid, layout)) {
        if value >= activation_threshold {
            *state = TaxelState::Protrude;
        }
    }
    pattern
}

fn check_thresholds(thresholds: &[f64]) -> Result<(), TactileError> {
    let ok = thresholds.len() == RING_SIZES.len()
        && thresholds.iter().all(|t| *t > 0.0 && *t <= 1.0)
        && thresholds.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(TactileError::BadThresholds(thresholds.to_vec()))
    }
}

/// Pressure mode: the largest ring whose threshold `p_max` meets is active.
pub fn pressure_map(
    p_max: f64,
    thresholds: &[f64],
    layout: &TaxelLayout,
) -> Result<TaxelPattern, TactileError> {
    check_thresholds(thresholds)?;
    let mut pattern = TaxelPattern::neutral();
    if let Some(level) = thresholds.iter().rposition(|t| p_max >= *t) {
        for &k in layout.ring(level) {
            pattern.states[k] = TaxelState::Protrude;
        }
    }
    Ok(pattern)
}
