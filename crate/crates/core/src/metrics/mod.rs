//! Evaluation statistics: rank agreement, classification quality,
//! feature correlations and perturbation deltas.

mod classification;
mod correlation;
mod perturbation;
mod ranking;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub use classification::{macro_pr, ConfusionMatrix, MacroScores};
pub use correlation::{pearson, pearson_matrix, Column, CorrelationMatrix};
pub use perturbation::{perturbation_deltas, AdvPattern, DeltaReport, DeltaRow, FeatureRows, Shift};
pub use ranking::{kendalls_w, spearman_src, Ranking};

/// Agreement of a panel of raters with a reference ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelAgreement {
    pub per_rater_src: Vec<f64>,
    /// Plain arithmetic mean of the per-rater SRCs.
    pub mean_src: Option<f64>,
    /// Concordance among the raters; needs at least two.
    pub kendalls_w: Option<f64>,
}

pub fn panel_agreement(reference: &Ranking, raters: &[Ranking]) -> Result<PanelAgreement> {
    let per_rater_src = raters.iter().map(|r| spearman_src(reference, r)).collect::<Result<Vec<_>>>()?;
    let mean_src = (!per_rater_src.is_empty()).then(|| per_rater_src.iter().sum::<f64>() / per_rater_src.len() as f64);
    let kendalls_w = if raters.len() >= 2 { Some(kendalls_w(raters)?) } else { None };
    Ok(PanelAgreement { per_rater_src, mean_src, kendalls_w })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub dof: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Welch's two-sample t-test.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TTest> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::Precondition("t-test needs at least 2 observations per sample".into()));
    }
    let stats = |s: &[f64]| {
        let n = s.len() as f64;
        let mean = s.iter().sum::<f64>() / n;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (n, mean, var)
    };
    let (nx, mx, vx) = stats(x);
    let (ny, my, vy) = stats(y);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if !(se2 > 0.0) {
        return Err(Error::Precondition("both samples have zero variance".into()));
    }
    let t = (mx - my) / se2.sqrt();
    let dof = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Precondition(e.to_string()))?;
    let p_value = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTest { t, dof, p_value })
}
