//! WebAssembly bindings for the binning demo page.
//!
//! The page draws a synthetic corpus whose ratings crowd around neutral, fits
//! the clustering-based binning and the equal-width baseline with the same
//! number of bins, and lets the user compare where the boundaries fall,
//! how many grid units each occupies, and how individual points tokenize.

use advkit::quantizer::BinningKind;
use advkit::{coverage, fit_linear_quantizer, fit_quantizer_with_k, AdvPoint, CoverageReport, QuantizerConfig, QuantizerModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const SCATTER_LIMIT: usize = 1500;

/// Corpus shape: `spread` scales every component's standard deviation, so
/// small values give a tight neutral cluster and large ones a flatter cloud.
pub fn synthetic_corpus(n: usize, spread: f64, seed: u64) -> Vec<AdvPoint> {
    let components = [
        ([4.0, 4.0, 4.2], [0.45, 0.4, 0.5], 0.7),
        ([5.6, 5.0, 5.8], [0.35, 0.35, 0.3], 0.2),
        ([2.6, 3.0, 2.2], [0.3, 0.35, 0.3], 0.1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let (mean, std, _) = if u < 0.7 {
                components[0]
            } else if u < 0.9 {
                components[1]
            } else {
                components[2]
            };
            let mut p = [0.0; 3];
            for i in 0..3 {
                let normal = Normal::new(mean[i], std[i] * spread).expect("positive std");
                p[i] = normal.sample(&mut rng).clamp(1.0, 7.0);
            }
            AdvPoint::from_array(p)
        })
        .collect()
}

#[derive(Serialize)]
struct Side {
    boundaries: [Vec<f64>; 3],
    coverage_rate: f64,
    occupied_units: usize,
    entropy: f64,
}

impl Side {
    fn new(model: &QuantizerModel, report: &CoverageReport) -> Self {
        Self {
            boundaries: [model.boundaries.a.clone(), model.boundaries.d.clone(), model.boundaries.v.clone()],
            coverage_rate: report.coverage_rate,
            occupied_units: report.occupied_units,
            entropy: report.occupancy_entropy(),
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    bins: usize,
    samples: usize,
    total_units: usize,
    nonlinear: Side,
    linear: Side,
    /// (a, v) pairs for the scatter plot, subsampled.
    scatter: &'a [[f64; 2]],
}

#[derive(Serialize)]
struct Tokenized {
    nonlinear: [u32; 3],
    nonlinear_center: [f64; 3],
    linear: [u32; 3],
    linear_center: [f64; 3],
}

/// A fitted pair of models over one synthetic corpus.
#[wasm_bindgen]
pub struct Demo {
    points: Vec<AdvPoint>,
    nonlinear: QuantizerModel,
    linear: QuantizerModel,
    nonlinear_cov: CoverageReport,
    linear_cov: CoverageReport,
    scatter: Vec<[f64; 2]>,
}

impl Demo {
    pub fn build(n: usize, bins: usize, spread: f64, seed: u64) -> Result<Demo, String> {
        if !(2..=14).contains(&bins) {
            return Err(format!("bins must lie in 2..=14, got {bins}"));
        }
        if !(n >= bins && n <= 50_000) {
            return Err(format!("sample count must lie in {bins}..=50000, got {n}"));
        }
        if !(spread > 0.0 && spread.is_finite()) {
            return Err("spread must be positive".into());
        }
        let points = synthetic_corpus(n, spread, seed);
        let cfg = QuantizerConfig { rng_seed: seed, restarts: 3, ..QuantizerConfig::default() };
        let nonlinear = fit_quantizer_with_k(&points, bins, &cfg).map_err(|e| e.to_string())?;
        let linear = fit_linear_quantizer(&points, bins).map_err(|e| e.to_string())?;
        let stride = points.len().div_ceil(SCATTER_LIMIT);
        let scatter = points.iter().step_by(stride).map(|p| [p.a, p.v]).collect();
        Ok(Demo {
            nonlinear_cov: coverage(&points, &nonlinear),
            linear_cov: coverage(&points, &linear),
            points,
            nonlinear,
            linear,
            scatter,
        })
    }

    fn model(&self, kind: BinningKind) -> (&QuantizerModel, &CoverageReport) {
        match kind {
            BinningKind::Nonlinear => (&self.nonlinear, &self.nonlinear_cov),
            BinningKind::Linear => (&self.linear, &self.linear_cov),
        }
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&Summary {
            bins: self.nonlinear.k,
            samples: self.points.len(),
            total_units: self.nonlinear_cov.total_units,
            nonlinear: Side::new(&self.nonlinear, &self.nonlinear_cov),
            linear: Side::new(&self.linear, &self.linear_cov),
            scatter: &self.scatter,
        })
        .expect("plain data serializes")
    }

    /// Occupancy counts for one valence level, rows indexed by x_a, columns by x_d.
    pub fn slice_counts(&self, kind: BinningKind, valence_token: u32) -> Result<Vec<Vec<usize>>, String> {
        let (_, report) = self.model(kind);
        if valence_token < 1 || valence_token > report.m {
            return Err(format!("valence token must lie in 1..={}", report.m));
        }
        Ok(report.grid_slices().swap_remove(valence_token as usize - 1))
    }

    pub fn tokenize_json(&self, a: f64, d: f64, v: f64) -> Result<String, String> {
        let p = AdvPoint::new(a, d, v);
        if !p.is_finite() {
            return Err("coordinates must be finite".into());
        }
        let side = |m: &QuantizerModel| -> Result<([u32; 3], [f64; 3]), String> {
            let t = m.quantize(&p);
            Ok((t.to_array(), m.bin_center(&t).map_err(|e| e.to_string())?.to_array()))
        };
        let ((nonlinear, nonlinear_center), (linear, linear_center)) = (side(&self.nonlinear)?, side(&self.linear)?);
        Ok(serde_json::to_string(&Tokenized { nonlinear, nonlinear_center, linear, linear_center }).expect("plain data"))
    }
}

fn parse_kind(kind: &str) -> Result<BinningKind, JsError> {
    match kind {
        "nonlinear" => Ok(BinningKind::Nonlinear),
        "linear" => Ok(BinningKind::Linear),
        other => Err(JsError::new(&format!("unknown binning {other:?}"))),
    }
}

#[wasm_bindgen]
impl Demo {
    /// Draws `n` points and fits both binnings with `bins` per axis.
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, bins: u32, spread: f64, seed: u32) -> Result<Demo, JsError> {
        Demo::build(n as usize, bins as usize, spread, seed as u64).map_err(|e| JsError::new(&e))
    }

    /// Boundaries, coverage and entropy of both binnings plus scatter points, as JSON.
    pub fn summary(&self) -> String {
        self.summary_json()
    }

    /// One valence slice of the occupancy grid as a JSON matrix.
    pub fn slice(&self, kind: &str, valence_token: u32) -> Result<String, JsError> {
        let counts = self.slice_counts(parse_kind(kind)?, valence_token).map_err(|e| JsError::new(&e))?;
        Ok(serde_json::to_string(&counts).expect("plain data"))
    }

    /// Tokens and bin centers of one point under both binnings, as JSON.
    pub fn tokenize(&self, a: f64, d: f64, v: f64) -> Result<String, JsError> {
        self.tokenize_json(a, d, v).map_err(|e| JsError::new(&e))
    }
}
