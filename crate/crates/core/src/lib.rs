//! Non-neural building blocks for dimensional emotion control in speech
//! synthesis: ADV normalization and label unification, clustering-based
//! nonlinear binning of the ADV cube, corpus cleaning, semi-supervised
//! sequence construction, training-objective math, and evaluation metrics.

// `!(x > y)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adv;
pub mod error;
pub mod flow;
pub mod ingest;
pub mod losses;
pub mod metrics;
pub mod quantizer;
pub mod sequencing;
pub mod vocab;

pub use adv::{normalize_adv, AdvPoint, AdvTokenTriple, Axis, AxisRange, AxisRanges, DatasetType};
pub use error::{Error, Result};
pub use quantizer::{
    bin_center, coverage, fit_linear_quantizer, fit_quantizer, fit_quantizer_with_k, quantize, select_cluster_count,
    CoverageReport, QuantizerConfig, QuantizerModel,
};
pub use vocab::{unify_label, LabelVocabulary};
