//! Training and inference token sequences for the codec language model.
//!
//! Training input:
//! `[sos, text.., attr, spk, a, d, v, gen, lbl, sem..]` where the three ADV
//! slots hold `ign` for datasets without ADV annotation. The output is the
//! input shifted left by one, with every position before the label target set
//! to `ign` and `eos` appended. The loss region is the trailing
//! `[lbl, sem.., eos]` span of length `L + 2`.

use serde::{Deserialize, Serialize};

use crate::adv::{AdvTokenTriple, DatasetType};
use crate::error::{Error, Result};
use crate::ingest::SampleRecord;
use crate::quantizer::QuantizerModel;
use crate::vocab::UNKNOWN_TOKEN;

/// Loss weight on an unmasked label target.
pub const LABEL_WEIGHT: f64 = 5.0;

/// Ids of the structural tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub sos: u32,
    pub eos: u32,
    pub attr: u32,
    pub gen: u32,
    pub ign: u32,
    /// Placeholder in the label slot when the model must predict the label.
    pub predict: u32,
}

impl SpecialTokens {
    pub fn all(&self) -> [u32; 6] {
        [self.sos, self.eos, self.attr, self.gen, self.ign, self.predict]
    }

    pub fn contains(&self, id: u32) -> bool {
        self.all().contains(&id)
    }
}

/// Flat vocabulary layout: label, ADV and semantic ranges plus special ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenLayout {
    /// Label tokens are `0..=label_max`.
    pub label_max: u32,
    /// ADV tokens are `1..=adv_bins`.
    pub adv_bins: u32,
    /// Semantic tokens are `semantic_start..semantic_start + semantic_size`.
    pub semantic_start: u32,
    pub semantic_size: u32,
    pub specials: SpecialTokens,
}

impl Default for TokenLayout {
    fn default() -> Self {
        let base = 6561;
        Self {
            label_max: 9,
            adv_bins: 14,
            semantic_start: 0,
            semantic_size: base,
            specials: SpecialTokens {
                sos: base,
                eos: base + 1,
                attr: base + 2,
                gen: base + 3,
                ign: base + 4,
                predict: base + 5,
            },
        }
    }
}

impl TokenLayout {
    pub fn is_semantic(&self, id: u32) -> bool {
        id >= self.semantic_start && (id - self.semantic_start) < self.semantic_size
    }

    pub fn validate(&self) -> Result<()> {
        let ids = self.specials.all();
        for (i, &x) in ids.iter().enumerate() {
            if ids[..i].contains(&x) {
                return Err(Error::Config(format!("special token id {x} used twice")));
            }
            if x <= self.label_max {
                return Err(Error::Config(format!("special token id {x} overlaps label range [0, {}]", self.label_max)));
            }
            if (1..=self.adv_bins).contains(&x) {
                return Err(Error::Config(format!("special token id {x} overlaps ADV range [1, {}]", self.adv_bins)));
            }
            if self.is_semantic(x) {
                return Err(Error::Config(format!("special token id {x} overlaps the semantic range")));
            }
        }
        Ok(())
    }
}

/// One teacher-forced training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePair {
    pub id: String,
    pub input_ids: Vec<u32>,
    pub output_ids: Vec<u32>,
    /// Aligned with the trailing `[lbl, sem.., eos]` region of `output_ids`.
    pub loss_weights: Vec<f64>,
}

impl SequencePair {
    pub fn label_masked(&self) -> bool {
        self.loss_weights[0] == 0.0
    }

    /// The `L + 2` output tokens covered by `loss_weights`.
    pub fn loss_targets(&self) -> &[u32] {
        &self.output_ids[self.output_ids.len() - self.loss_weights.len()..]
    }
}

/// Whether the output label position is excluded from the loss.
pub fn label_is_masked(dataset_type: DatasetType, label_token: u32) -> bool {
    dataset_type == DatasetType::ElicitedLabel || label_token == UNKNOWN_TOKEN
}

/// Per-position weights over `[lbl, sem.., eos]`.
pub fn loss_weight_vector(mask_label: bool, semantic_len: usize) -> Result<Vec<f64>> {
    if semantic_len < 1 {
        return Err(Error::Precondition("at least one semantic token is required".into()));
    }
    let mut w = vec![1.0; semantic_len + 2];
    w[0] = if mask_label { 0.0 } else { LABEL_WEIGHT };
    Ok(w)
}

fn check_label(label: u32, layout: &TokenLayout) -> Result<()> {
    if label > layout.label_max {
        return Err(Error::Precondition(format!("label token {label} exceeds {}", layout.label_max)));
    }
    Ok(())
}

fn check_semantic(sem_tokens: &[u32], layout: &TokenLayout) -> Result<()> {
    if sem_tokens.is_empty() {
        return Err(Error::Precondition("semantic token sequence is empty".into()));
    }
    for &t in sem_tokens {
        if layout.specials.contains(t) {
            return Err(Error::TokenCollision(t));
        }
        if !layout.is_semantic(t) {
            return Err(Error::Precondition(format!("semantic token {t} outside the semantic range")));
        }
    }
    Ok(())
}

fn prefix(text: &[u32], speaker: u32, adv: Option<AdvTokenTriple>, label_slot: u32, layout: &TokenLayout) -> Vec<u32> {
    let s = &layout.specials;
    let mut ids = Vec::with_capacity(text.len() + 8);
    ids.push(s.sos);
    ids.extend_from_slice(text);
    ids.push(s.attr);
    ids.push(speaker);
    match adv {
        Some(t) => ids.extend(t.to_array()),
        None => ids.extend([s.ign; 3]),
    }
    ids.push(s.gen);
    ids.push(label_slot);
    ids
}

/// Builds the input/output pair and loss weights for one record.
pub fn assemble(
    record: &SampleRecord,
    sem_tokens: &[u32],
    layout: &TokenLayout,
    quantizer: &QuantizerModel,
) -> Result<SequencePair> {
    check_semantic(sem_tokens, layout)?;
    check_label(record.label_token, layout)?;
    let invalid = |reason: &str| Error::InvalidRecord { id: record.id.clone(), reason: reason.into() };
    let adv = match (record.dataset_type.has_adv(), record.adv) {
        (true, Some(p)) => {
            let t = quantizer.quantize(&p);
            t.validate(layout.adv_bins)?;
            Some(t)
        }
        (true, None) => return Err(invalid("ADV-annotated dataset type without ADV values")),
        (false, Some(_)) => return Err(invalid("label-only dataset type carries ADV values")),
        (false, None) => None,
    };

    let mut input_ids = prefix(&record.text_token_ids, record.speaker_id, adv, record.label_token, layout);
    let label_pos = input_ids.len() - 1;
    input_ids.extend_from_slice(sem_tokens);

    let masked = label_is_masked(record.dataset_type, record.label_token);
    let ign = layout.specials.ign;
    let mut output_ids = vec![ign; label_pos - 1];
    output_ids.push(if masked { ign } else { record.label_token });
    output_ids.extend_from_slice(sem_tokens);
    output_ids.push(layout.specials.eos);
    debug_assert_eq!(input_ids.len(), output_ids.len());

    Ok(SequencePair {
        id: record.id.clone(),
        input_ids,
        output_ids,
        loss_weights: loss_weight_vector(masked, sem_tokens.len())?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    /// Label given, ADV slots ignored.
    LabelControlled,
    /// ADV tokens given, label predicted.
    AdvControlled,
    /// Pseudo-ADV tokens estimated from text by the caller, label predicted.
    EndToEnd,
}

impl InferenceMode {
    fn name(self) -> &'static str {
        match self {
            InferenceMode::LabelControlled => "label_controlled",
            InferenceMode::AdvControlled => "adv_controlled",
            InferenceMode::EndToEnd => "end_to_end",
        }
    }
}

/// Conditioning supplied at inference time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InferenceControls {
    pub label: Option<u32>,
    pub adv: Option<AdvTokenTriple>,
}

/// The prompt prefix up to and including the label slot.
pub fn inference_mode_sequence(
    mode: InferenceMode,
    text_ids: &[u32],
    speaker_id: u32,
    controls: InferenceControls,
    layout: &TokenLayout,
) -> Result<Vec<u32>> {
    let mismatch = Error::ModeMismatch { mode: mode.name() };
    match (mode, controls.label, controls.adv) {
        (InferenceMode::LabelControlled, Some(label), None) => {
            check_label(label, layout)?;
            Ok(prefix(text_ids, speaker_id, None, label, layout))
        }
        (InferenceMode::AdvControlled | InferenceMode::EndToEnd, None, Some(adv)) => {
            adv.validate(layout.adv_bins)?;
            Ok(prefix(text_ids, speaker_id, Some(adv), layout.specials.predict, layout))
        }
        _ => Err(mismatch),
    }
}
