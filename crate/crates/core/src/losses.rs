//! Training objectives for the language model, the ADV predictor, and the
//! emotion-condition gate.

use serde::{Deserialize, Serialize};

use crate::adv::AdvPoint;
use crate::error::{Error, Result};

/// Tolerance on row sums of probability vectors.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    /// Smoothing mass `epsilon` in `[0, 1)`.
    pub epsilon: f64,
    /// Vocabulary size `K`.
    pub vocab_size: usize,
}

impl SmoothingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1), got {}", self.epsilon)));
        }
        if self.vocab_size < 2 {
            return Err(Error::Config("vocab_size must be >= 2".into()));
        }
        Ok(())
    }

    /// Target mass on vocabulary entry `v` when the ground truth is `target`.
    ///
    /// Off-target entries get `epsilon / K` each, so the target distribution
    /// sums to `1 - epsilon / K` rather than 1.
    pub fn target_mass(&self, v: usize, target: usize) -> f64 {
        if v == target {
            1.0 - self.epsilon
        } else {
            self.epsilon / self.vocab_size as f64
        }
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, vocab_size: 6567 }
    }
}

/// Weighted, label-smoothed cross-entropy averaged over the `L + 2` loss positions.
///
/// `probs[l]` is the model distribution at position `l`, `targets[l]` the
/// ground-truth token, `weights[l]` the position weight. Positions with zero
/// weight are skipped entirely.
pub fn smoothed_sequence_loss(probs: &[Vec<f64>], targets: &[usize], weights: &[f64], cfg: &SmoothingConfig) -> Result<f64> {
    cfg.validate()?;
    let len = probs.len();
    if targets.len() != len {
        return Err(Error::LengthMismatch { what: "targets vs probabilities", left: targets.len(), right: len });
    }
    if weights.len() != len {
        return Err(Error::LengthMismatch { what: "weights vs probabilities", left: weights.len(), right: len });
    }
    if len < 3 {
        return Err(Error::Precondition(format!("loss region needs at least 3 positions, got {len}")));
    }

    let mut total = 0.0;
    for (l, ((q, &target), &w)) in probs.iter().zip(targets).zip(weights).enumerate() {
        if q.len() != cfg.vocab_size {
            return Err(Error::LengthMismatch { what: "probability row vs vocab_size", left: q.len(), right: cfg.vocab_size });
        }
        if target >= cfg.vocab_size {
            return Err(Error::Precondition(format!("target {target} at position {l} outside the vocabulary")));
        }
        let sum: f64 = q.iter().sum();
        if q.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(Error::Precondition(format!("row {l} is not a probability distribution")));
        }
        if w == 0.0 {
            continue;
        }
        let mut cross = 0.0;
        for (v, &qv) in q.iter().enumerate() {
            let p = cfg.target_mass(v, target);
            if p == 0.0 {
                continue;
            }
            if qv == 0.0 {
                return Err(Error::InfiniteLoss { position: l });
            }
            cross += p * qv.ln();
        }
        total += w * cross;
    }
    Ok(-total / len as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvLossConfig {
    /// Weight of the per-dimension regression term.
    pub alpha: f64,
}

impl Default for AdvLossConfig {
    fn default() -> Self {
        Self { alpha: 1.0 }
    }
}

/// Batch-summed ADV predictor loss: `alpha * |pred - truth|^2 + |pred - center|^2`.
///
/// `centers[b]` is the bin center of `truth[b]` under the quantizer.
pub fn adv_predictor_loss(pred: &[AdvPoint], truth: &[AdvPoint], centers: &[AdvPoint], cfg: &AdvLossConfig) -> Result<f64> {
    if !cfg.alpha.is_finite() || cfg.alpha < 0.0 {
        return Err(Error::Config(format!("alpha must be finite and >= 0, got {}", cfg.alpha)));
    }
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch { what: "truth vs prediction batch", left: truth.len(), right: pred.len() });
    }
    if centers.len() != pred.len() {
        return Err(Error::LengthMismatch { what: "centers vs prediction batch", left: centers.len(), right: pred.len() });
    }
    let regression: f64 = pred.iter().zip(truth).map(|(p, t)| p.squared_distance(t)).sum();
    let anchor: f64 = pred.iter().zip(centers).map(|(p, c)| p.squared_distance(c)).sum();
    Ok(cfg.alpha * regression + anchor)
}

/// How the ADV predictor loss joins the sequence loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlmLossConfig {
    pub adv_weight: f64,
    /// Divide the batch-summed ADV loss by the batch size before adding.
    pub adv_batch_mean: bool,
}

impl Default for LlmLossConfig {
    fn default() -> Self {
        Self { adv_weight: 1.0, adv_batch_mean: false }
    }
}

/// Sequence loss plus the (optionally batch-averaged) ADV loss.
pub fn combined_llm_loss(sequence_loss: f64, adv_loss: f64, batch_size: usize, cfg: &LlmLossConfig) -> f64 {
    let adv = if cfg.adv_batch_mean && batch_size > 0 { adv_loss / batch_size as f64 } else { adv_loss };
    sequence_loss + cfg.adv_weight * adv
}

/// Fuses label and ADV embeddings into the emotion condition.
///
/// * label 0: the ADV embedding alone;
/// * label given, no ADV: `(gate + 1) * e_label`;
/// * both: `gate * e_label + (1 - gate) * e_attn`.
pub fn emotion_gate(
    e_label: Option<&[f64]>,
    e_adv: Option<&[f64]>,
    e_attn: Option<&[f64]>,
    gate: f64,
    label_token: u32,
    adv_present: bool,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&gate) {
        return Err(Error::Precondition(format!("gate must lie in [0, 1], got {gate}")));
    }
    let dims: Vec<usize> = [e_label, e_adv, e_attn].iter().flatten().map(|v| v.len()).collect();
    if let Some(&first) = dims.first() {
        if let Some(&other) = dims.iter().find(|&&d| d != first) {
            return Err(Error::LengthMismatch { what: "gate input dimensions", left: first, right: other });
        }
    }
    if label_token == 0 {
        return e_adv.map(<[f64]>::to_vec).ok_or(Error::MissingGateInput("e_adv"));
    }
    let lbl = e_label.ok_or(Error::MissingGateInput("e_label"))?;
    if !adv_present {
        return Ok(lbl.iter().map(|x| (gate + 1.0) * x).collect());
    }
    let attn = e_attn.ok_or(Error::MissingGateInput("e_attn"))?;
    Ok(lbl.iter().zip(attn).map(|(l, a)| gate * l + (1.0 - gate) * a).collect())
}
