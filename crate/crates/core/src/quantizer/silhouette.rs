use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

fn dist(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    super::kmeans::sq_dist(p, q).sqrt()
}

/// Mean silhouette coefficient of a hard clustering.
///
/// Clusters are the distinct values in `labels`. A point alone in its cluster
/// scores 0, as does a point with `a == b == 0`.
pub fn silhouette_score(points: &[[f64; 3]], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::LengthMismatch { what: "points vs labels", left: points.len(), right: labels.len() });
    }
    let mut index = BTreeMap::new();
    for &l in labels {
        let next = index.len();
        index.entry(l).or_insert(next);
    }
    let k = index.len();
    if k < 2 {
        return Err(Error::SingleCluster(k));
    }
    let dense: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut sizes = vec![0usize; k];
    for &j in &dense {
        sizes[j] += 1;
    }

    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for (i, p) in points.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (q, &j) in points.iter().zip(&dense) {
            sums[j] += dist(p, q);
        }
        let own = dense[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&j| j != own)
            .map(|j| sums[j] / sizes[j] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

/// Silhouette on at most `max_points` points drawn uniformly without replacement.
pub fn sampled_silhouette<R: Rng + ?Sized>(
    points: &[[f64; 3]],
    labels: &[usize],
    max_points: usize,
    rng: &mut R,
) -> Result<f64> {
    if points.len() <= max_points {
        return silhouette_score(points, labels);
    }
    let mut picked = sample(rng, points.len(), max_points).into_vec();
    picked.sort_unstable();
    let sub_points: Vec<_> = picked.iter().map(|&i| points[i]).collect();
    let sub_labels: Vec<_> = picked.iter().map(|&i| labels[i]).collect();
    silhouette_score(&sub_points, &sub_labels)
}
