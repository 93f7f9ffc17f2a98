//! Mean acoustic-feature shifts caused by pushing ADV tokens up or down.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of a perturbation on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Shift {
    Up,
    Down,
}

/// A subset of `{±A, ±D, ±V}`, e.g. `+A +D -V` or `-A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AdvPattern {
    pub a: Option<Shift>,
    pub d: Option<Shift>,
    pub v: Option<Shift>,
}

impl AdvPattern {
    pub fn mirrored(self) -> Self {
        let flip = |s: Option<Shift>| {
            s.map(|s| match s {
                Shift::Up => Shift::Down,
                Shift::Down => Shift::Up,
            })
        };
        Self { a: flip(self.a), d: flip(self.d), v: flip(self.v) }
    }
}

impl fmt::Display for AdvPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (shift, letter) in [(self.a, 'A'), (self.d, 'D'), (self.v, 'V')] {
            match shift {
                Some(Shift::Up) => parts.push(format!("+{letter}")),
                Some(Shift::Down) => parts.push(format!("-{letter}")),
                None => {}
            }
        }
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for AdvPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut pattern = AdvPattern::default();
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let chars: Vec<char> = compact.chars().collect();
        if chars.is_empty() || !chars.len().is_multiple_of(2) {
            return Err(Error::Parse(format!("bad ADV pattern {s:?}")));
        }
        for pair in chars.chunks(2) {
            let shift = match pair[0] {
                '+' => Shift::Up,
                '-' => Shift::Down,
                _ => return Err(Error::Parse(format!("bad ADV pattern {s:?}"))),
            };
            let slot = match pair[1].to_ascii_uppercase() {
                'A' => &mut pattern.a,
                'D' => &mut pattern.d,
                'V' => &mut pattern.v,
                _ => return Err(Error::Parse(format!("bad ADV pattern {s:?}"))),
            };
            if slot.replace(shift).is_some() {
                return Err(Error::Parse(format!("axis repeated in ADV pattern {s:?}")));
            }
        }
        Ok(pattern)
    }
}

/// Feature rows sharing one column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRows {
    pub features: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureRows {
    pub fn means(&self) -> Result<Vec<f64>> {
        if self.rows.is_empty() {
            return Err(Error::Precondition("no rows to average".into()));
        }
        let mut sums = vec![0.0; self.features.len()];
        for row in &self.rows {
            if row.len() != sums.len() {
                return Err(Error::LengthMismatch { what: "feature row", left: row.len(), right: sums.len() });
            }
            for (s, x) in sums.iter_mut().zip(row) {
                *s += x;
            }
        }
        Ok(sums.into_iter().map(|s| s / self.rows.len() as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub emotion: String,
    pub pattern: AdvPattern,
    /// Mean of the perturbed group minus mean of the baseline, per feature.
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub features: Vec<String>,
    pub rows: Vec<DeltaRow>,
}

impl DeltaReport {
    pub fn get(&self, emotion: &str, pattern: AdvPattern) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.emotion == emotion && r.pattern == pattern)
    }

    /// Signed table, one line per (emotion, pattern).
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<12}{:<12}", "emotion", "pattern");
        for f in &self.features {
            let _ = write!(out, "{f:>14}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<12}{:<12}", r.emotion, r.pattern.to_string());
            for d in &r.deltas {
                let _ = write!(out, "{d:>+14.2}");
            }
            out.push('\n');
        }
        out
    }
}

/// Mean feature deltas of each perturbed group relative to its emotion's baseline.
pub fn perturbation_deltas(
    baseline: &BTreeMap<String, FeatureRows>,
    perturbed: &BTreeMap<(String, AdvPattern), FeatureRows>,
) -> Result<DeltaReport> {
    let mut features: Option<&Vec<String>> = None;
    let mut rows = Vec::with_capacity(perturbed.len());
    for ((emotion, pattern), group) in perturbed {
        let base = baseline.get(emotion).ok_or_else(|| Error::MissingBaseline(emotion.clone()))?;
        for names in [&base.features, &group.features] {
            match features {
                None => features = Some(names),
                Some(f) if f != names => {
                    return Err(Error::Precondition(format!("feature columns differ for {emotion:?}")));
                }
                _ => {}
            }
        }
        let (b, p) = (base.means()?, group.means()?);
        rows.push(DeltaRow { emotion: emotion.clone(), pattern: *pattern, deltas: p.iter().zip(&b).map(|(p, b)| p - b).collect() });
    }
    Ok(DeltaReport { features: features.cloned().unwrap_or_default(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[[f64; 2]]) -> FeatureRows {
        FeatureRows { features: vec!["f0_mean".into(), "energy".into()], rows: v.iter().map(|r| r.to_vec()).collect() }
    }

    #[test]
    fn pattern_parse_and_display() {
        let p: AdvPattern = "+A +D +V".parse().unwrap();
        assert_eq!(p.to_string(), "+A +D +V");
        let q: AdvPattern = "-a+v".parse().unwrap();
        assert_eq!(q, AdvPattern { a: Some(Shift::Down), d: None, v: Some(Shift::Up) });
        assert_eq!(q.mirrored().to_string(), "+A -V");
        assert!("+A+A".parse::<AdvPattern>().is_err());
        assert!("A".parse::<AdvPattern>().is_err());
        assert!("*A".parse::<AdvPattern>().is_err());
    }

    #[test]
    fn identical_groups_have_zero_delta() {
        let base = BTreeMap::from([("Happy".to_string(), rows(&[[200.0, 60.0], [210.0, 62.0]]))]);
        let pert = BTreeMap::from([(("Happy".to_string(), "+A".parse().unwrap()), rows(&[[200.0, 60.0], [210.0, 62.0]]))]);
        let report = perturbation_deltas(&base, &pert).unwrap();
        assert_eq!(report.rows[0].deltas, vec![0.0, 0.0]);
    }

    #[test]
    fn constructed_shift() {
        let base = BTreeMap::from([("Happy".to_string(), rows(&[[200.0, 60.0], [210.0, 62.0]]))]);
        let p: AdvPattern = "+A +D +V".parse().unwrap();
        let pert = BTreeMap::from([(("Happy".to_string(), p), rows(&[[208.0, 60.0], [218.0, 62.0]]))]);
        let report = perturbation_deltas(&base, &pert).unwrap();
        assert_eq!(report.get("Happy", p).unwrap().deltas, vec![8.0, 0.0]);
        assert!(report.to_table().contains("+8.00"));
    }

    #[test]
    fn missing_baseline() {
        let pert = BTreeMap::from([(("Sad".to_string(), "-V".parse().unwrap()), rows(&[[1.0, 1.0]]))]);
        assert_eq!(perturbation_deltas(&BTreeMap::new(), &pert).unwrap_err(), Error::MissingBaseline("Sad".into()));
    }
}
