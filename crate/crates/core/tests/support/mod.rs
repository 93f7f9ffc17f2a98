//! Independent reference implementations and the criterion checks built on
//! them. Shared by this crate's integration tests and the CLI's acceptance
//! target, so nothing here calls back into the code under test for the
//! quantity being checked.

#![allow(dead_code)]
// Oracles are spelled out as index loops on purpose.
#![allow(clippy::needless_range_loop)]

pub mod checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Isotropic Gaussian blobs, `n_per` points around each center.
pub fn blobs(centers: &[[f64; 3]], n_per: usize, std: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, std).unwrap();
    let mut out = Vec::with_capacity(centers.len() * n_per);
    for c in centers {
        for _ in 0..n_per {
            out.push([c[0] + noise.sample(&mut r), c[1] + noise.sample(&mut r), c[2] + noise.sample(&mut r)]);
        }
    }
    out
}

/// Mixture of axis-aligned Gaussians clipped to `[1, 7]`.
pub fn clipped_mixture(components: &[([f64; 3], [f64; 3], f64)], n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    let total: f64 = components.iter().map(|c| c.2).sum();
    (0..n)
        .map(|_| {
            let mut u = r.gen::<f64>() * total;
            let (mean, std, _) = components.iter().find(|c| {
                u -= c.2;
                u <= 0.0
            }).unwrap_or(components.last().unwrap());
            let mut p = [0.0; 3];
            for i in 0..3 {
                p[i] = Normal::new(mean[i], std[i]).unwrap().sample(&mut r).clamp(1.0, 7.0);
            }
            p
        })
        .collect()
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).powi(2)).sum()
}

fn nearest(p: &[f64; 3], centroids: &[[f64; 3]]) -> usize {
    let mut best = 0;
    for j in 1..centroids.len() {
        if dist2(p, &centroids[j]) < dist2(p, &centroids[best]) {
            best = j;
        }
    }
    best
}

/// Plain Lloyd iterations from the given initial centers.
pub fn lloyd(points: &[[f64; 3]], mut centroids: Vec<[f64; 3]>) -> (Vec<[f64; 3]>, Vec<usize>, f64) {
    let k = centroids.len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..500 {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = next != labels;
        labels = next;
        for j in 0..k {
            let members: Vec<&[f64; 3]> = points.iter().zip(&labels).filter(|(_, &l)| l == j).map(|(p, _)| p).collect();
            if !members.is_empty() {
                for i in 0..3 {
                    centroids[j][i] = members.iter().map(|p| p[i]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let sse = points.iter().zip(&labels).map(|(p, &l)| dist2(p, &centroids[l])).sum();
    (centroids, labels, sse)
}

/// Mean silhouette by the textbook definition, O(n^2).
pub fn silhouette(points: &[[f64; 3]], labels: &[usize]) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sum[labels[j]] += dist2(p, q).sqrt();
                cnt[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if cnt[own] == 0 {
            continue;
        }
        let a = sum[own] / cnt[own] as f64;
        let b = (0..k).filter(|&c| c != own && cnt[c] > 0).map(|c| sum[c] / cnt[c] as f64).fold(f64::INFINITY, f64::min);
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / points.len() as f64
}

/// Every k in `2..=k_max`, `restarts` random-point initializations each; the
/// lowest-SSE clustering's silhouette scores k, highest silhouette wins.
pub fn brute_force_k(points: &[[f64; 3]], k_max: usize, restarts: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 2..=k_max {
        let mut best_run: Option<(f64, Vec<usize>)> = None;
        for _ in 0..restarts {
            let init = rand::seq::index::sample(&mut r, points.len(), k).into_iter().map(|i| points[i]).collect();
            let (_, labels, sse) = lloyd(points, init);
            if best_run.as_ref().is_none_or(|(s, _)| sse < *s) {
                best_run = Some((sse, labels));
            }
        }
        let s = silhouette(points, &best_run.unwrap().1);
        if s > best.0 {
            best = (s, k);
        }
    }
    best.1
}

/// Per-axis boundaries recomputed from the points and the fitted centers:
/// nearest-center partition, population variances, midpoint or size-weighted
/// split depending on the variance ratio.
pub fn boundaries_by_hand(points: &[[f64; 3]], centroids: &[[f64; 3]], threshold: f64) -> [Vec<f64>; 3] {
    let k = centroids.len();
    let labels: Vec<usize> = points.iter().map(|p| nearest(p, centroids)).collect();
    let mut out: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let mut size = vec![0.0; k];
        let mut var = vec![0.0; k];
        for (p, &l) in points.iter().zip(&labels) {
            size[l] += 1.0;
            var[l] += (p[c] - centroids[l][c]).powi(2);
        }
        for j in 0..k {
            if size[j] > 0.0 {
                var[j] /= size[j];
            }
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| centroids[x][c].partial_cmp(&centroids[y][c]).unwrap());
        for w in order.windows(2) {
            let (i, j) = (w[0], w[1]);
            let (mi, mj) = (centroids[i][c], centroids[j][c]);
            let r = if var[i].min(var[j]) == 0.0 { f64::INFINITY } else { var[i].max(var[j]) / var[i].min(var[j]) };
            let t = if r > threshold { (size[i] * mi + size[j] * mj) / (size[i] + size[j]) } else { (mi + mj) / 2.0 };
            out[c].push(t);
        }
    }
    out
}

/// Linear scan: one plus the number of boundaries strictly below `x`.
pub fn scan_token(x: f64, boundaries: &[f64]) -> u32 {
    let mut n = 1;
    for &t in boundaries {
        if x > t {
            n += 1;
        }
    }
    n
}

/// Smoothed cross-entropy written as a double loop over positions and vocabulary.
pub fn smoothed_loss_loop(q: &[Vec<f64>], targets: &[usize], weights: &[f64], eps: f64) -> f64 {
    let k = q[0].len() as f64;
    let mut sum = 0.0;
    for l in 0..q.len() {
        for v in 0..q[l].len() {
            let p = if v == targets[l] { 1.0 - eps } else { eps / k };
            if p > 0.0 {
                sum += weights[l] * p * q[l][v].ln();
            }
        }
    }
    -sum / q.len() as f64
}

pub fn adv_loss_loop(pred: &[[f64; 3]], truth: &[[f64; 3]], centers: &[[f64; 3]], alpha: f64) -> f64 {
    let mut total = 0.0;
    for b in 0..pred.len() {
        for c in 0..3 {
            total += alpha * (pred[b][c] - truth[b][c]).powi(2) + (pred[b][c] - centers[b][c]).powi(2);
        }
    }
    total
}

/// A random probability row with every entry bounded away from zero.
pub fn random_distribution<R: Rng>(r: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + r.gen::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx).powi(2);
        syy += (y[i] - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn random_permutation<R: Rng>(r: &mut R, n: usize) -> Vec<u32> {
    use rand::seq::SliceRandom;
    let mut v: Vec<u32> = (1..=n as u32).collect();
    v.shuffle(r);
    v
}

/// Manifest line builder for ingest fixtures.
pub fn manifest_line(id: &str, speaker: &str, duration: f64, tokens: &[u32]) -> String {
    format!(
        r#"{{"id":"{id}","dataset":"toy","dataset_type":"S_AL","speaker":"{speaker}","label":"Happy","adv_a":4.0,"adv_d":4.0,"adv_v":4.0,"duration_s":{duration},"text_token_ids":{tokens:?}}}"#
    )
}
