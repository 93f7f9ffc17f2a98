use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square count matrix; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c == 0 {
            return Err(Error::Precondition("confusion matrix needs at least one class".into()));
        }
        if let Some(row) = counts.iter().find(|row| row.len() != c) {
            return Err(Error::LengthMismatch { what: "confusion matrix row", left: row.len(), right: c });
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch { what: "truth vs predictions", left: truth.len(), right: predicted.len() });
        }
        let mut counts = vec![vec![0; classes]; classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= classes || p >= classes {
                return Err(Error::Precondition(format!("class index out of range: ({t}, {p})")));
            }
            counts[t][p] += 1;
        }
        Self::new(counts)
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

/// Macro-averaged precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub per_class_precision: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    /// Classes whose column (precision) or row (recall) sum was zero; they contribute 0.
    pub degenerate_precision: Vec<usize>,
    pub degenerate_recall: Vec<usize>,
}

pub fn macro_pr(cm: &ConfusionMatrix) -> Result<MacroScores> {
    let c = cm.classes();
    let m = cm.counts();
    if m.iter().flatten().all(|&x| x == 0) {
        return Err(Error::EmptyConfusion);
    }
    let mut out = MacroScores {
        precision: 0.0,
        recall: 0.0,
        per_class_precision: Vec::with_capacity(c),
        per_class_recall: Vec::with_capacity(c),
        degenerate_precision: Vec::new(),
        degenerate_recall: Vec::new(),
    };
    for j in 0..c {
        let diag = m[j][j] as f64;
        let col: u64 = m.iter().map(|row| row[j]).sum();
        let row: u64 = m[j].iter().sum();
        out.per_class_precision.push(if col == 0 {
            out.degenerate_precision.push(j);
            0.0
        } else {
            diag / col as f64
        });
        out.per_class_recall.push(if row == 0 {
            out.degenerate_recall.push(j);
            0.0
        } else {
            diag / row as f64
        });
    }
    out.precision = out.per_class_precision.iter().sum::<f64>() / c as f64;
    out.recall = out.per_class_recall.iter().sum::<f64>() / c as f64;
    Ok(out)
}
