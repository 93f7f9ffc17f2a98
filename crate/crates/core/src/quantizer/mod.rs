//! Per-axis nonlinear binning of the ADV space.
//!
//! A fitted [`QuantizerModel`] carries `K - 1` strictly increasing boundaries
//! per axis. Boundaries come from 3-D k-means centroids: per axis the centroid
//! coordinates are sorted, and each adjacent pair yields either the midpoint or
//! the size-weighted mean of the two coordinates, the latter when the larger
//! of the two clusters' axis variances exceeds the smaller by more than
//! `variance_ratio_threshold`.

pub mod kmeans;
mod select;
pub mod silhouette;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adv::{AdvPoint, AdvTokenTriple, Axis, ADV_MAX, ADV_MIN};
use crate::error::{Error, Result};

pub use select::{integer_cube_root, select_cluster_count, FitReport, ProbeStat};
pub use silhouette::{sampled_silhouette, silhouette_score};

/// Minimum gap enforced between consecutive boundaries.
pub const BOUNDARY_EPSILON: f64 = 1e-9;

/// Knobs of the K sweep and boundary rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    /// Upper bound on probed cluster counts; the cube-root rule may lower it further.
    pub k_max_cap: usize,
    pub sweep_step: usize,
    /// k-means runs per probed `k`, and for the final fit.
    pub restarts: usize,
    /// Weight of the silhouette standard deviation in the K criterion.
    pub penalty_lambda: f64,
    pub variance_ratio_threshold: f64,
    pub rng_seed: u64,
    /// Silhouette is evaluated on a seeded subsample of at most this many points.
    pub silhouette_sample: usize,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self {
            k_max_cap: 14,
            sweep_step: 1,
            restarts: 5,
            penalty_lambda: 0.25,
            variance_ratio_threshold: 2.0,
            rng_seed: 0,
            silhouette_sample: 2000,
        }
    }
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.k_max_cap < 2 {
            return fail("k_max_cap must be >= 2");
        }
        if self.restarts < 1 {
            return fail("restarts must be >= 1");
        }
        if self.sweep_step < 1 {
            return fail("sweep_step must be >= 1");
        }
        if !(self.penalty_lambda >= 0.0) || !self.penalty_lambda.is_finite() {
            return fail("penalty_lambda must be finite and >= 0");
        }
        if !(self.variance_ratio_threshold >= 0.0) {
            return fail("variance_ratio_threshold must be >= 0");
        }
        if self.silhouette_sample < 2 {
            return fail("silhouette_sample must be >= 2");
        }
        Ok(())
    }
}

/// One value per ADV axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PerAxis<T> {
    pub a: T,
    pub d: T,
    pub v: T,
}

impl<T> PerAxis<T> {
    pub fn from_fn(mut f: impl FnMut(Axis) -> T) -> Self {
        Self { a: f(Axis::Arousal), d: f(Axis::Dominance), v: f(Axis::Valence) }
    }

    pub fn get(&self, axis: Axis) -> &T {
        match axis {
            Axis::Arousal => &self.a,
            Axis::Dominance => &self.d,
            Axis::Valence => &self.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinningKind {
    Nonlinear,
    Linear,
}

/// A fitted binning of the ADV cube into `k` bins per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerModel {
    pub kind: BinningKind,
    pub k: usize,
    pub centroids: Vec<AdvPoint>,
    pub cluster_sizes: Vec<usize>,
    /// Indexed by cluster: population variance of the axis coordinate.
    pub cluster_axis_variances: PerAxis<Vec<f64>>,
    /// Sorted centroid coordinates; entry `i` is the representative of bin `i + 1`.
    pub axis_centers: PerAxis<Vec<f64>>,
    pub boundaries: PerAxis<Vec<f64>>,
    /// k-means objective of the final clustering (0 for linear models).
    pub objective: f64,
    pub warnings: Vec<String>,
    pub config: Option<QuantizerConfig>,
    pub fit_report: Option<FitReport>,
}

fn to_arrays(points: &[AdvPoint]) -> Vec<[f64; 3]> {
    points.iter().map(|p| p.to_array()).collect()
}

/// Chooses K by the silhouette sweep and fits the binning.
pub fn fit_quantizer(points: &[AdvPoint], cfg: &QuantizerConfig) -> Result<QuantizerModel> {
    let raw = to_arrays(points);
    let (k, report) = select_cluster_count(&raw, cfg)?;
    let mut model = fit_arrays(&raw, k, cfg)?;
    model.fit_report = Some(report);
    Ok(model)
}

/// Fits the binning with a fixed number of clusters, skipping K selection.
pub fn fit_quantizer_with_k(points: &[AdvPoint], k: usize, cfg: &QuantizerConfig) -> Result<QuantizerModel> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {k}")));
    }
    if points.len() < k {
        return Err(Error::Precondition(format!("{k} clusters requested for {} points", points.len())));
    }
    let raw = to_arrays(points);
    if raw.iter().any(|p| p.iter().any(|x| !x.is_finite())) {
        return Err(Error::Precondition("non-finite point in fit set".into()));
    }
    fit_arrays(&raw, k, cfg)
}

fn fit_arrays(points: &[[f64; 3]], k: usize, cfg: &QuantizerConfig) -> Result<QuantizerModel> {
    // Lowest objective wins; run index breaks ties so scheduling never matters.
    let runs = select::restarts(points, k, cfg, select::STAGE_FIT);
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, x), (j, y)| x.objective.total_cmp(&y.objective).then(i.cmp(j)))
        .map(|(_, run)| run)
        .expect("restarts >= 1");

    let sizes = best.cluster_sizes();
    let variances = PerAxis::from_fn(|axis| cluster_variances(points, &best.assignment, &best.centroids, axis));
    let mut warnings = Vec::new();
    let mut axis_centers = PerAxis::<Vec<f64>>::default();
    let mut boundaries = PerAxis::<Vec<f64>>::default();
    for axis in Axis::ALL {
        let (centers, bounds) = axis_boundaries(
            &best.centroids,
            &sizes,
            variances.get(axis),
            axis,
            cfg.variance_ratio_threshold,
            &mut warnings,
        )?;
        match axis {
            Axis::Arousal => (axis_centers.a, boundaries.a) = (centers, bounds),
            Axis::Dominance => (axis_centers.d, boundaries.d) = (centers, bounds),
            Axis::Valence => (axis_centers.v, boundaries.v) = (centers, bounds),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(QuantizerModel {
        kind: BinningKind::Nonlinear,
        k,
        centroids: best.centroids.iter().map(|c| AdvPoint::from_array(*c)).collect(),
        cluster_sizes: sizes,
        cluster_axis_variances: variances,
        axis_centers,
        boundaries,
        objective: best.objective,
        warnings,
        config: Some(cfg.clone()),
        fit_report: None,
    })
}

fn cluster_variances(points: &[[f64; 3]], assignment: &[usize], centroids: &[[f64; 3]], axis: Axis) -> Vec<f64> {
    let c = axis.index();
    let mut sums = vec![0.0; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &j) in points.iter().zip(assignment) {
        let dev = p[c] - centroids[j][c];
        sums[j] += dev * dev;
        counts[j] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }).collect()
}

/// Ratio of the larger to the smaller variance; a zero variance counts as infinitely unlike.
pub fn variance_ratio(var_1: f64, var_2: f64) -> f64 {
    let (lo, hi) = if var_1 <= var_2 { (var_1, var_2) } else { (var_2, var_1) };
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn axis_boundaries(
    centroids: &[[f64; 3]],
    sizes: &[usize],
    variances: &[f64],
    axis: Axis,
    threshold: f64,
    warnings: &mut Vec<String>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = axis.index();
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&i, &j| centroids[i][c].total_cmp(&centroids[j][c]).then(i.cmp(&j)));
    let centers: Vec<f64> = order.iter().map(|&j| centroids[j][c]).collect();
    if centers.first() == centers.last() {
        return Err(Error::DegenerateAxis(axis.letter()));
    }

    let mut bounds = Vec::with_capacity(order.len() - 1);
    for (i, pair) in order.windows(2).enumerate() {
        let (lo, hi) = (pair[0], pair[1]);
        let (m_lo, m_hi) = (centers[i], centers[i + 1]);
        let mid = 0.5 * (m_lo + m_hi);
        let (n_lo, n_hi) = (sizes[lo] as f64, sizes[hi] as f64);
        let weighted = if n_lo + n_hi > 0.0 { (n_lo * m_lo + n_hi * m_hi) / (n_lo + n_hi) } else { mid };
        let t = if variance_ratio(variances[lo], variances[hi]) > threshold { weighted } else { mid };
        bounds.push(t);
    }
    for i in 1..bounds.len() {
        if bounds[i] < bounds[i - 1] + BOUNDARY_EPSILON {
            warnings.push(format!(
                "axis {}: boundary {} nudged from {} to keep boundaries strictly increasing",
                axis.letter(),
                i + 1,
                bounds[i]
            ));
            bounds[i] = bounds[i - 1] + BOUNDARY_EPSILON;
        }
    }
    Ok((centers, bounds))
}

/// `m` equal-width bins over `[1, 7]` per axis.
///
/// Bin representatives are the bin midpoints; the "centroids" are those
/// midpoints on the diagonal, and sizes/variances describe the nearest-centroid
/// partition of `points`.
pub fn fit_linear_quantizer(points: &[AdvPoint], m: usize) -> Result<QuantizerModel> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {m}")));
    }
    let width = (ADV_MAX - ADV_MIN) / m as f64;
    let bounds: Vec<f64> = (1..m).map(|i| ADV_MIN + (ADV_MAX - ADV_MIN) * i as f64 / m as f64).collect();
    let centers: Vec<f64> = (0..m).map(|i| ADV_MIN + width * (i as f64 + 0.5)).collect();
    let centroids: Vec<[f64; 3]> = centers.iter().map(|&c| [c, c, c]).collect();

    let raw = to_arrays(points);
    let assignment: Vec<usize> = raw
        .iter()
        .map(|p| {
            (0..m)
                .min_by(|&i, &j| kmeans::sq_dist(p, &centroids[i]).total_cmp(&kmeans::sq_dist(p, &centroids[j])))
                .unwrap_or(0)
        })
        .collect();
    let mut sizes = vec![0usize; m];
    for &j in &assignment {
        sizes[j] += 1;
    }
    let variances = PerAxis::from_fn(|axis| cluster_variances(&raw, &assignment, &centroids, axis));

    Ok(QuantizerModel {
        kind: BinningKind::Linear,
        k: m,
        centroids: centroids.iter().map(|c| AdvPoint::from_array(*c)).collect(),
        cluster_sizes: sizes,
        cluster_axis_variances: variances,
        axis_centers: PerAxis::from_fn(|_| centers.clone()),
        boundaries: PerAxis::from_fn(|_| bounds.clone()),
        objective: 0.0,
        warnings: Vec::new(),
        config: None,
        fit_report: None,
    })
}

/// `1 + #{boundaries strictly below x}`.
pub fn axis_token(x: f64, boundaries: &[f64]) -> u32 {
    // Boundaries are sorted, so the count of `t < x` is a partition point.
    1 + boundaries.partition_point(|&t| t < x) as u32
}

impl QuantizerModel {
    pub fn bins(&self) -> u32 {
        self.k as u32
    }

    /// Maps a point onto its controllable unit.
    pub fn quantize(&self, p: &AdvPoint) -> AdvTokenTriple {
        AdvTokenTriple::new(
            axis_token(p.a, &self.boundaries.a),
            axis_token(p.d, &self.boundaries.d),
            axis_token(p.v, &self.boundaries.v),
        )
    }

    /// Representative point of a unit: the sorted centroid coordinate per axis.
    pub fn bin_center(&self, tokens: &AdvTokenTriple) -> Result<AdvPoint> {
        tokens.validate(self.bins())?;
        let pick = |axis: Axis| self.axis_centers.get(axis)[(tokens.get(axis) - 1) as usize];
        Ok(AdvPoint::new(pick(Axis::Arousal), pick(Axis::Dominance), pick(Axis::Valence)))
    }

    /// Checks the structural invariants of a model (after load, for instance).
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parse(format!("invalid quantizer model: {m}")));
        if self.k < 2 {
            return bad(format!("k = {}", self.k));
        }
        for axis in Axis::ALL {
            let b = self.boundaries.get(axis);
            if b.len() != self.k - 1 || self.axis_centers.get(axis).len() != self.k {
                return bad(format!("axis {} has wrong lengths", axis.letter()));
            }
            if b.windows(2).any(|w| !(w[0] < w[1])) {
                return bad(format!("axis {} boundaries not strictly increasing", axis.letter()));
            }
            if self.cluster_axis_variances.get(axis).len() != self.centroids.len() {
                return bad(format!("axis {} variances length", axis.letter()));
            }
        }
        if self.cluster_sizes.len() != self.centroids.len() {
            return bad("cluster_sizes length".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Free-function form of [`QuantizerModel::quantize`].
pub fn quantize(p: &AdvPoint, model: &QuantizerModel) -> AdvTokenTriple {
    model.quantize(p)
}

/// Free-function form of [`QuantizerModel::bin_center`].
pub fn bin_center(tokens: &AdvTokenTriple, model: &QuantizerModel) -> Result<AdvPoint> {
    model.bin_center(tokens)
}

/// Occupancy of the `m^3` controllable units by a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub m: u32,
    pub samples: usize,
    pub occupied_units: usize,
    pub total_units: usize,
    pub coverage_rate: f64,
    #[serde(with = "histogram_entries")]
    pub occupancy_histogram: BTreeMap<AdvTokenTriple, usize>,
}

mod histogram_entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        unit: [u32; 3],
        count: usize,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<AdvTokenTriple, usize>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(t, &count)| Entry { unit: t.to_array(), count }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<AdvTokenTriple, usize>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (AdvTokenTriple::new(e.unit[0], e.unit[1], e.unit[2]), e.count)).collect())
    }
}

impl CoverageReport {
    /// Shannon entropy (nats) of the per-unit sample distribution.
    pub fn occupancy_entropy(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        let n = self.samples as f64;
        self.occupancy_histogram
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }

    /// Counts laid out as `[x_v - 1][x_a - 1][x_d - 1]`: one `m x m` slice per valence level.
    pub fn grid_slices(&self) -> Vec<Vec<Vec<usize>>> {
        let m = self.m as usize;
        let mut grid = vec![vec![vec![0; m]; m]; m];
        for (t, &c) in &self.occupancy_histogram {
            grid[(t.v - 1) as usize][(t.a - 1) as usize][(t.d - 1) as usize] = c;
        }
        grid
    }
}

/// Quantizes every point and tallies occupied units.
pub fn coverage(points: &[AdvPoint], model: &QuantizerModel) -> CoverageReport {
    let mut hist = BTreeMap::new();
    for p in points {
        *hist.entry(model.quantize(p)).or_insert(0) += 1;
    }
    let m = model.bins();
    let total_units = (m as usize).pow(3);
    CoverageReport {
        m,
        samples: points.len(),
        occupied_units: hist.len(),
        total_units,
        coverage_rate: hist.len() as f64 / total_units as f64,
        occupancy_histogram: hist,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A two-cluster model built by hand through the same boundary rule.
    fn two_cluster_model(sizes: [usize; 2], variances: [f64; 2]) -> QuantizerModel {
        let centroids = [[2.0, 2.0, 2.0], [4.0, 4.0, 4.0]];
        let mut warnings = Vec::new();
        let (centers, bounds) =
            axis_boundaries(&centroids, &sizes, &variances, Axis::Arousal, 2.0, &mut warnings).unwrap();
        QuantizerModel {
            kind: BinningKind::Nonlinear,
            k: 2,
            centroids: centroids.iter().map(|c| AdvPoint::from_array(*c)).collect(),
            cluster_sizes: sizes.to_vec(),
            cluster_axis_variances: PerAxis::from_fn(|_| variances.to_vec()),
            axis_centers: PerAxis::from_fn(|_| centers.clone()),
            boundaries: PerAxis::from_fn(|_| bounds.clone()),
            objective: 0.0,
            warnings,
            config: None,
            fit_report: None,
        }
    }

    #[test]
    fn equal_clusters_use_midpoint() {
        let m = two_cluster_model([5, 5], [0.1, 0.1]);
        assert_eq!(m.boundaries.a, vec![3.0]);
    }

    #[test]
    fn unequal_variance_uses_weighted_boundary() {
        let m = two_cluster_model([3, 1], [0.3, 0.1]);
        assert_eq!(m.boundaries.a, vec![2.5]);
        // ratio exactly at the threshold keeps the midpoint
        let m = two_cluster_model([3, 1], [0.2, 0.1]);
        assert_eq!(m.boundaries.a, vec![3.0]);
    }

    #[test]
    fn zero_variance_counts_as_infinite_ratio() {
        assert_eq!(variance_ratio(0.0, 0.5), f64::INFINITY);
        assert_eq!(variance_ratio(0.0, 0.0), f64::INFINITY);
        assert_eq!(variance_ratio(0.5, 0.1), 5.0);
        let m = two_cluster_model([3, 1], [0.0, 0.1]);
        assert_eq!(m.boundaries.a, vec![2.5]);
    }

    #[test]
    fn strict_token_rule() {
        let b = [3.0, 5.0];
        assert_eq!(axis_token(4.2, &b), 2);
        assert_eq!(axis_token(3.0, &b), 1);
        assert_eq!(axis_token(6.9, &b), 3);
        assert_eq!(axis_token(1.0, &b), 1);
        assert_eq!(axis_token(5.0 + 1e-12, &b), 3);
    }

    #[test]
    fn bin_center_lookup_and_range() {
        let m = two_cluster_model([5, 5], [0.1, 0.1]);
        assert_eq!(m.bin_center(&AdvTokenTriple::new(2, 1, 2)).unwrap(), AdvPoint::new(4.0, 2.0, 4.0));
        assert!(matches!(m.bin_center(&AdvTokenTriple::new(3, 1, 1)), Err(Error::TokenOutOfRange { axis: 'a', .. })));
        assert!(m.bin_center(&AdvTokenTriple::new(1, 0, 1)).is_err());
    }

    #[test]
    fn degenerate_axis_is_rejected() {
        let centroids = [[2.0, 3.0, 2.0], [4.0, 3.0, 4.0]];
        let err = axis_boundaries(&centroids, &[1, 1], &[0.1, 0.1], Axis::Dominance, 2.0, &mut Vec::new());
        assert_eq!(err.unwrap_err(), Error::DegenerateAxis('d'));
    }

    #[test]
    fn ties_are_strictified() {
        let centroids = [[2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [3.0, 0.0, 0.0], [5.0, 0.0, 0.0]];
        let mut warnings = Vec::new();
        let (_, b) =
            axis_boundaries(&centroids, &[1, 1, 1, 1], &[0.1; 4], Axis::Arousal, 2.0, &mut warnings).unwrap();
        assert_eq!(b[0], 2.5);
        assert_eq!(b[1], 3.0);
        assert_eq!(b[2], 4.0);
        let centroids = [[2.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 0.0, 0.0], [5.0, 0.0, 0.0]];
        let (_, b) =
            axis_boundaries(&centroids, &[1, 1, 1, 1], &[0.1; 4], Axis::Arousal, 2.0, &mut warnings).unwrap();
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b[1], 2.0 + BOUNDARY_EPSILON);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn linear_boundaries() {
        let m2 = fit_linear_quantizer(&[], 2).unwrap();
        assert_eq!(m2.boundaries.a, vec![4.0]);
        let m14 = fit_linear_quantizer(&[AdvPoint::new(4.0, 4.0, 4.0)], 14).unwrap();
        assert_eq!(m14.boundaries.v.len(), 13);
        for (i, b) in m14.boundaries.d.iter().enumerate() {
            assert!((b - (1.0 + 6.0 * (i + 1) as f64 / 14.0)).abs() < 1e-15);
        }
        assert_eq!(m14.cluster_sizes.iter().sum::<usize>(), 1);
        m14.validate().unwrap();
        assert!(fit_linear_quantizer(&[], 1).is_err());
    }

    #[test]
    fn coverage_counts() {
        let m = fit_linear_quantizer(&[], 2).unwrap();
        let one = coverage(&[AdvPoint::new(1.5, 1.5, 1.5)], &m);
        assert_eq!(one.coverage_rate, 1.0 / 8.0);
        let mut all = Vec::new();
        for a in [2.0, 6.0] {
            for d in [2.0, 6.0] {
                for v in [2.0, 6.0] {
                    all.push(AdvPoint::new(a, d, v));
                }
            }
        }
        let full = coverage(&all, &m);
        assert_eq!(full.coverage_rate, 1.0);
        assert_eq!(full.occupied_units, 8);
        assert!((full.occupancy_entropy() - 8f64.ln()).abs() < 1e-12);
        let empty = coverage(&[], &m);
        assert_eq!((empty.coverage_rate, empty.occupancy_histogram.len()), (0.0, 0));
        let grid = full.grid_slices();
        assert_eq!(grid[1][0][1], 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = QuantizerConfig::default();
        cfg.validate().unwrap();
        cfg.k_max_cap = 1;
        assert!(cfg.validate().is_err());
        let cfg = QuantizerConfig { restarts: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = QuantizerConfig { penalty_lambda: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
