//! Lloyd's k-means in 3-space with furthest-point seeding.

use rand::Rng;

/// Hard cap on Lloyd iterations per run.
pub const MAX_ITERATIONS: usize = 300;

pub(crate) fn sq_dist(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let (a, b, c) = (p[0] - q[0], p[1] - q[1], p[2] - q[2]);
    a * a + b * b + c * c
}

/// Outcome of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub centroids: Vec<[f64; 3]>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squared distances at convergence.
    pub objective: f64,
    /// Objective after every update step.
    pub trace: Vec<f64>,
}

impl KMeansRun {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &j in &self.assignment {
            sizes[j] += 1;
        }
        sizes
    }
}

fn nearest(p: &[f64; 3], centroids: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// First centre uniformly at random, then repeatedly the point furthest from
/// every centre chosen so far (lowest index wins ties).
pub fn furthest_point_seeds<R: Rng + ?Sized>(points: &[[f64; 3]], k: usize, rng: &mut R) -> Vec<[f64; 3]> {
    let first = rng.gen_range(0..points.len());
    let mut centroids = vec![points[first]];
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[far] {
                far = i;
            }
        }
        let c = points[far];
        for (d, p) in min_d.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Runs Lloyd's algorithm from furthest-point seeds.
///
/// An empty cluster is re-seeded at the point currently furthest from its
/// own centroid, which never increases the objective.
pub fn kmeans<R: Rng + ?Sized>(points: &[[f64; 3]], k: usize, rng: &mut R) -> KMeansRun {
    assert!(k >= 1 && !points.is_empty(), "k-means needs k >= 1 and at least one point");
    let mut centroids = furthest_point_seeds(points, k, rng);
    let mut assignment = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut dist = Vec::with_capacity(points.len());
        for (p, slot) in points.iter().zip(assignment.iter_mut()) {
            let (j, d) = nearest(p, &centroids);
            if *slot != j {
                *slot = j;
                changed = true;
            }
            dist.push(d);
        }

        let mut sums = vec![[0.0f64; 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &j) in points.iter().zip(&assignment) {
            counts[j] += 1;
            for c in 0..3 {
                sums[j][c] += p[c];
            }
        }
        let mut reseeded = false;
        for j in 0..k {
            if counts[j] > 0 {
                let n = counts[j] as f64;
                centroids[j] = [sums[j][0] / n, sums[j][1] / n, sums[j][2] / n];
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let (far, d) = dist
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
                if d > 0.0 {
                    centroids[j] = points[far];
                    dist[far] = 0.0;
                    reseeded = true;
                }
            }
        }
        trace.push(objective(points, &assignment, &centroids));
        if !changed && !reseeded {
            break;
        }
    }

    let objective = *trace.last().unwrap_or(&0.0);
    KMeansRun { centroids, assignment, objective, trace }
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn objective(points: &[[f64; 3]], assignment: &[usize], centroids: &[[f64; 3]]) -> f64 {
    points.iter().zip(assignment).map(|(p, &j)| sq_dist(p, &centroids[j])).sum()
}
