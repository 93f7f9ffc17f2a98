//! Arousal / dominance / valence values, their token form, and dataset typing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower end of the normalized ADV scale.
pub const ADV_MIN: f64 = 1.0;
/// Upper end of the normalized ADV scale.
pub const ADV_MAX: f64 = 7.0;

/// One of the three ADV axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Arousal,
    Dominance,
    Valence,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Arousal, Axis::Dominance, Axis::Valence];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Axis::Arousal => 'a',
            Axis::Dominance => 'd',
            Axis::Valence => 'v',
        }
    }
}

/// A continuous (arousal, dominance, valence) triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvPoint {
    pub a: f64,
    pub d: f64,
    pub v: f64,
}

impl AdvPoint {
    pub const fn new(a: f64, d: f64, v: f64) -> Self {
        Self { a, d, v }
    }

    pub fn from_array(xs: [f64; 3]) -> Self {
        Self::new(xs[0], xs[1], xs[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.a, self.d, self.v]
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Arousal => self.a,
            Axis::Dominance => self.d,
            Axis::Valence => self.v,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.d.is_finite() && self.v.is_finite()
    }

    pub fn squared_distance(&self, other: &AdvPoint) -> f64 {
        let (da, dd, dv) = (self.a - other.a, self.d - other.d, self.v - other.v);
        da * da + dd * dd + dv * dv
    }
}

/// Quantized ADV coordinates, each in `1..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdvTokenTriple {
    pub a: u32,
    pub d: u32,
    pub v: u32,
}

impl AdvTokenTriple {
    pub const fn new(a: u32, d: u32, v: u32) -> Self {
        Self { a, d, v }
    }

    pub fn get(&self, axis: Axis) -> u32 {
        match axis {
            Axis::Arousal => self.a,
            Axis::Dominance => self.d,
            Axis::Valence => self.v,
        }
    }

    pub fn to_array(self) -> [u32; 3] {
        [self.a, self.d, self.v]
    }

    /// Checks every coordinate against `1..=m`.
    pub fn validate(&self, m: u32) -> Result<()> {
        for axis in Axis::ALL {
            let token = self.get(axis);
            if token < 1 || token > m {
                return Err(Error::TokenOutOfRange { axis: axis.letter(), token, max: m });
            }
        }
        Ok(())
    }
}

impl fmt::Display for AdvTokenTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.d, self.v)
    }
}

/// Spontaneous/elicited crossed with whether ADV annotations are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetType {
    #[serde(rename = "S_AL")]
    SpontaneousAdvLabel,
    #[serde(rename = "S_L")]
    SpontaneousLabel,
    #[serde(rename = "E_AL")]
    ElicitedAdvLabel,
    #[serde(rename = "E_L")]
    ElicitedLabel,
}

impl DatasetType {
    pub const ALL: [DatasetType; 4] = [
        DatasetType::SpontaneousAdvLabel,
        DatasetType::SpontaneousLabel,
        DatasetType::ElicitedAdvLabel,
        DatasetType::ElicitedLabel,
    ];

    pub fn has_adv(self) -> bool {
        matches!(self, DatasetType::SpontaneousAdvLabel | DatasetType::ElicitedAdvLabel)
    }

    pub fn is_elicited(self) -> bool {
        matches!(self, DatasetType::ElicitedAdvLabel | DatasetType::ElicitedLabel)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetType::SpontaneousAdvLabel => "S_AL",
            DatasetType::SpontaneousLabel => "S_L",
            DatasetType::ElicitedAdvLabel => "E_AL",
            DatasetType::ElicitedLabel => "E_L",
        }
    }
}

impl fmt::Display for DatasetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S_AL" => Ok(DatasetType::SpontaneousAdvLabel),
            "S_L" => Ok(DatasetType::SpontaneousLabel),
            "E_AL" => Ok(DatasetType::ElicitedAdvLabel),
            "E_L" => Ok(DatasetType::ElicitedLabel),
            other => Err(Error::Parse(format!("unknown dataset type {other:?}"))),
        }
    }
}

/// Raw annotation range of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }
}

/// Raw ranges for the (a, d, v) axes of one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRanges {
    pub a: AxisRange,
    pub d: AxisRange,
    pub v: AxisRange,
}

impl AxisRanges {
    pub const fn uniform(min: f64, max: f64) -> Self {
        let r = AxisRange::new(min, max);
        Self { a: r, d: r, v: r }
    }

    pub fn get(&self, axis: Axis) -> AxisRange {
        match axis {
            Axis::Arousal => self.a,
            Axis::Dominance => self.d,
            Axis::Valence => self.v,
        }
    }
}

impl Default for AxisRanges {
    fn default() -> Self {
        Self::uniform(ADV_MIN, ADV_MAX)
    }
}

/// Result of [`normalize_adv`]: the mapped point plus how many axes were clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub point: AdvPoint,
    pub clamped_axes: usize,
}

/// Maps a raw triple affinely onto `[1, 7]` per axis.
///
/// Values outside the configured range are clamped to it first; the number
/// of clamped axes is reported so callers can keep a warning counter.
pub fn normalize_adv(raw: [f64; 3], ranges: &AxisRanges) -> Result<Normalized> {
    let mut out = [0.0; 3];
    let mut clamped_axes = 0;
    for axis in Axis::ALL {
        let AxisRange { min, max } = ranges.get(axis);
        if !(max > min) {
            return Err(Error::DegenerateRange { axis: axis.letter(), value: min });
        }
        let x = raw[axis.index()];
        if !x.is_finite() {
            return Err(Error::Precondition(format!("non-finite raw value on axis {}", axis.letter())));
        }
        let clamped = x.clamp(min, max);
        if clamped != x {
            clamped_axes += 1;
        }
        out[axis.index()] = ADV_MIN + (ADV_MAX - ADV_MIN) * ((clamped - min) / (max - min));
    }
    Ok(Normalized { point: AdvPoint::from_array(out), clamped_axes })
}
