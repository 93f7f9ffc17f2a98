//! Choosing the number of clusters by a silhouette sweep.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansRun};
use super::silhouette::sampled_silhouette;
use super::QuantizerConfig;
use crate::error::{Error, Result};

/// Silhouette statistics for one probed `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStat {
    pub k: usize,
    pub mean_silhouette: f64,
    pub std_silhouette: f64,
    pub runs: usize,
    /// Added while refining around the best coarse candidates.
    pub refined: bool,
}

impl ProbeStat {
    pub fn penalized(&self, lambda: f64) -> f64 {
        self.mean_silhouette - lambda * self.std_silhouette
    }
}

/// Diagnostics of the K selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n_points: usize,
    pub k_max: usize,
    /// Sorted by `k`.
    pub probes: Vec<ProbeStat>,
    pub selected_k: usize,
}

/// Largest `k` with `k^3 <= n`.
pub fn integer_cube_root(n: usize) -> usize {
    let mut k = (n as f64).cbrt().round() as usize;
    while k.pow(3) > n {
        k -= 1;
    }
    while (k + 1).pow(3) <= n {
        k += 1;
    }
    k
}

/// Mixes the fit seed with a stage tag, `k`, and a run index into a stream seed.
pub(crate) fn stream_seed(seed: u64, stage: u64, k: usize, run: usize) -> u64 {
    let mut z = seed
        ^ stage.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (k as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ (run as u64).wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) const STAGE_SWEEP: u64 = 1;
pub(crate) const STAGE_SILHOUETTE: u64 = 2;
pub(crate) const STAGE_FIT: u64 = 3;

/// Runs `cfg.restarts` k-means fits for `k` with per-run seeds derived from `stage`.
pub(crate) fn restarts(points: &[[f64; 3]], k: usize, cfg: &QuantizerConfig, stage: u64) -> Vec<KMeansRun> {
    let run = |r: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.rng_seed, stage, k, r));
        kmeans(points, k, &mut rng)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..cfg.restarts).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.restarts).map(run).collect()
    }
}

fn probe(points: &[[f64; 3]], k: usize, cfg: &QuantizerConfig, refined: bool) -> ProbeStat {
    let runs = restarts(points, k, cfg, STAGE_SWEEP);
    let scores: Vec<f64> = runs
        .iter()
        .enumerate()
        .map(|(r, run)| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.rng_seed, STAGE_SILHOUETTE, k, r));
            // A run that collapsed onto a single cluster has no separation to score.
            sampled_silhouette(points, &run.assignment, cfg.silhouette_sample, &mut rng).unwrap_or(0.0)
        })
        .collect();
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    ProbeStat { k, mean_silhouette: mean, std_silhouette: var.sqrt(), runs: scores.len(), refined }
}

/// Picks K by the coarse sweep, neighbour refinement, and penalized argmax.
pub fn select_cluster_count(points: &[[f64; 3]], cfg: &QuantizerConfig) -> Result<(usize, FitReport)> {
    cfg.validate()?;
    let n = points.len();
    if n < 8 {
        return Err(Error::InsufficientSamples(n));
    }
    if points.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return Err(Error::Precondition("non-finite point in fit set".into()));
    }
    let k_max = cfg.k_max_cap.min(integer_cube_root(n));

    let mut table: BTreeMap<usize, ProbeStat> = BTreeMap::new();
    for k in (2..=k_max).step_by(cfg.sweep_step) {
        table.insert(k, probe(points, k, cfg, false));
    }

    let mut ranked: Vec<&ProbeStat> = table.values().collect();
    ranked.sort_by(|x, y| y.mean_silhouette.total_cmp(&x.mean_silhouette).then(x.k.cmp(&y.k)));
    let top = ranked.len().div_ceil(4);
    let candidates: Vec<usize> = ranked.iter().take(top).map(|p| p.k).collect();
    for k in candidates {
        for neighbour in [k - 1, k + 1] {
            if (2..=k_max).contains(&neighbour) && !table.contains_key(&neighbour) {
                table.insert(neighbour, probe(points, neighbour, cfg, true));
            }
        }
    }

    let best = table
        .values()
        .fold(None::<&ProbeStat>, |best, p| match best {
            Some(b) if b.penalized(cfg.penalty_lambda) >= p.penalized(cfg.penalty_lambda) => Some(b),
            _ => Some(p),
        })
        .expect("k_max >= 2 guarantees at least one probe");
    let selected_k = best.k;
    let report = FitReport { n_points: n, k_max, probes: table.into_values().collect(), selected_k };
    Ok((selected_k, report))
}
