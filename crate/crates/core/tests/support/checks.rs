//! One function per acceptance criterion. Each returns a short detail line
//! on success and a description of the first violation otherwise.

use std::time::Instant;

use advkit::flow::{cfm_loss, ot_interpolant, ot_target_field, sample_source, FlowConfig, Tensor};
use advkit::ingest::{self, CleaningPolicy, RejectReason, RejectedRow, SampleRecord};
use advkit::losses::{adv_predictor_loss, smoothed_sequence_loss, AdvLossConfig, SmoothingConfig};
use advkit::metrics::{kendalls_w, macro_pr, spearman_src, ConfusionMatrix, Ranking};
use advkit::quantizer::integer_cube_root;
use advkit::sequencing::{assemble, TokenLayout, LABEL_WEIGHT};
use advkit::{
    fit_linear_quantizer, fit_quantizer, fit_quantizer_with_k, select_cluster_count, AdvPoint, AdvTokenTriple,
    DatasetType, QuantizerConfig, QuantizerModel,
};
use rand::Rng;

use super::*;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn to_points(raw: &[[f64; 3]]) -> Vec<AdvPoint> {
    raw.iter().map(|p| AdvPoint::from_array(*p)).collect()
}

fn centroid_arrays(model: &QuantizerModel) -> Vec<[f64; 3]> {
    model.centroids.iter().map(|c| c.to_array()).collect()
}

const BLOB_CENTERS: [[f64; 3]; 4] = [[2.0, 2.0, 2.0], [6.0, 5.5, 6.0], [2.5, 6.0, 5.0], [5.5, 2.5, 3.0]];

/// Well-separated toy sets with K = 2, 3, 4 (N <= 500).
pub fn toy_sets() -> Vec<(usize, Vec<[f64; 3]>)> {
    [(2, 150), (3, 120), (4, 100)]
        .into_iter()
        .map(|(k, n_per)| (k, blobs(&BLOB_CENTERS[..k], n_per, 0.25, 40 + k as u64)))
        .collect()
}

/// The selector agrees with an exhaustive sweep, and fitted boundaries match
/// the midpoint / size-weighted formulas recomputed from the points.
pub fn quantizer_oracle_equivalence() -> Check {
    let start = Instant::now();
    let cfg = QuantizerConfig { rng_seed: 7, ..QuantizerConfig::default() };
    let mut worst = 0.0f64;
    for (true_k, points) in toy_sets() {
        let (k, _) = select_cluster_count(&points, &cfg).map_err(|e| e.to_string())?;
        let k_max = cfg.k_max_cap.min(integer_cube_root(points.len()));
        let oracle = brute_force_k(&points, k_max, 20, 99);
        ensure!(k == oracle, "N={}: selector chose K={k}, exhaustive sweep K={oracle}", points.len());
        ensure!(k == true_k, "N={}: selected K={k} for {true_k} blobs", points.len());

        let model = fit_quantizer(&to_points(&points), &cfg).map_err(|e| e.to_string())?;
        let expected = boundaries_by_hand(&points, &centroid_arrays(&model), cfg.variance_ratio_threshold);
        let got = [&model.boundaries.a, &model.boundaries.d, &model.boundaries.v];
        for c in 0..3 {
            ensure!(got[c].len() == k - 1, "axis {c}: {} boundaries for K={k}", got[c].len());
            for (g, e) in got[c].iter().zip(&expected[c]) {
                worst = worst.max((g - e).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "boundary deviation {worst:e} exceeds 1e-9");

    // Two hand-evaluated cases: equal spread gives the midpoint, a 3:1 split
    // with unequal spread gives the size-weighted point.
    let k2 = |pts: &[[f64; 3]]| fit_quantizer_with_k(&to_points(pts), 2, &cfg).map_err(|e| e.to_string());
    let equal = k2(&[[1.8, 1.8, 1.8], [2.2, 2.2, 2.2], [3.8, 3.8, 3.8], [4.2, 4.2, 4.2]])?;
    ensure!((equal.boundaries.a[0] - 3.0).abs() <= 1e-9, "midpoint case gave {}", equal.boundaries.a[0]);
    let skew = k2(&[[1.5, 2.0, 2.0], [2.0, 2.0, 2.0], [2.5, 2.0, 2.0], [4.0, 4.0, 4.0]])?;
    ensure!((skew.boundaries.a[0] - 2.5).abs() <= 1e-9, "weighted case gave {}", skew.boundaries.a[0]);

    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("K = 2, 3, 4 recovered; max boundary error {worst:.1e}; {secs:.2} s"))
}

/// Models used for the token-map checks: the toy fits plus m = 14 linear and forced-K models.
pub fn toy_models() -> Result<Vec<QuantizerModel>, String> {
    let cfg = QuantizerConfig { rng_seed: 3, restarts: 2, ..QuantizerConfig::default() };
    let mut models = Vec::new();
    for (_, points) in toy_sets() {
        models.push(fit_quantizer(&to_points(&points), &cfg).map_err(|e| e.to_string())?);
    }
    let mixture = to_points(&skewed_mixture(3000, 5));
    models.push(fit_quantizer_with_k(&mixture, 14, &cfg).map_err(|e| e.to_string())?);
    models.push(fit_linear_quantizer(&mixture, 14).map_err(|e| e.to_string())?);
    Ok(models)
}

pub fn token_map_exactness() -> Check {
    let models = toy_models()?;
    let grid: Vec<f64> = (0..100).map(|i| 0.5 + 7.0 * i as f64 / 99.0).collect();
    let mut checked = 0usize;
    for model in &models {
        let bounds = [&model.boundaries.a, &model.boundaries.d, &model.boundaries.v];
        // Grid values plus every boundary itself, where strictness matters.
        let mut values = grid.clone();
        for b in bounds {
            values.extend(b.iter().copied());
        }
        for &a in &values {
            for &d in &grid {
                for &v in &grid {
                    let got = model.quantize(&AdvPoint::new(a, d, v));
                    let want = AdvTokenTriple::new(scan_token(a, bounds[0]), scan_token(d, bounds[1]), scan_token(v, bounds[2]));
                    ensure!(got == want, "K={} at ({a}, {d}, {v}): {got} vs scan {want}", model.k);
                    checked += 1;
                }
            }
        }
        let k = model.k as u32;
        for a in 1..=k {
            for d in 1..=k {
                for v in 1..=k {
                    let t = AdvTokenTriple::new(a, d, v);
                    let center = model.bin_center(&t).map_err(|e| e.to_string())?;
                    ensure!(model.quantize(&center) == t, "K={k}: round trip of {t} failed");
                }
            }
        }
    }
    Ok(format!("{} models, {checked} grid points, all K^3 round trips", models.len()))
}

/// Three Gaussians, most of the mass near the neutral center, clipped to the cube.
pub fn skewed_mixture(n: usize, seed: u64) -> Vec<[f64; 3]> {
    clipped_mixture(
        &[
            ([4.0, 4.0, 4.2], [0.45, 0.4, 0.5], 0.7),
            ([5.6, 5.0, 5.8], [0.35, 0.35, 0.3], 0.2),
            ([2.6, 3.0, 2.2], [0.3, 0.35, 0.3], 0.1),
        ],
        n,
        seed,
    )
}

pub fn coverage_direction() -> Check {
    let start = Instant::now();
    let points = to_points(&skewed_mixture(10_000, 2024));
    let cfg = QuantizerConfig { rng_seed: 2024, ..QuantizerConfig::default() };
    let nonlinear = fit_quantizer_with_k(&points, 14, &cfg).map_err(|e| e.to_string())?;
    let linear = fit_linear_quantizer(&points, 14).map_err(|e| e.to_string())?;
    let (cn, cl) = (advkit::coverage(&points, &nonlinear), advkit::coverage(&points, &linear));
    let (hn, hl) = (cn.occupancy_entropy(), cl.occupancy_entropy());
    ensure!(cn.coverage_rate > cl.coverage_rate, "coverage nonlinear {} <= linear {}", cn.coverage_rate, cl.coverage_rate);
    ensure!(hn > hl, "entropy nonlinear {hn} <= linear {hl}");
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s");
    Ok(format!(
        "coverage {:.2}% vs {:.2}%, entropy {hn:.3} vs {hl:.3} nats; {secs:.2} s",
        100.0 * cn.coverage_rate,
        100.0 * cl.coverage_rate
    ))
}

pub fn masking_truth_table() -> Check {
    let layout = TokenLayout::default();
    let model = fit_linear_quantizer(&[AdvPoint::new(4.0, 4.0, 4.0)], 14).map_err(|e| e.to_string())?;
    let sem = [17, 42, 4000];
    let mut masked_cells = 0;
    for dataset_type in DatasetType::ALL {
        for label in [0u32, 6] {
            let record = SampleRecord {
                id: format!("{dataset_type}-{label}"),
                dataset_type,
                text_token_ids: vec![100, 101],
                speaker_id: 3,
                label_token: label,
                adv: dataset_type.has_adv().then(|| AdvPoint::new(2.0, 4.0, 6.5)),
            };
            let pair = assemble(&record, &sem, &layout, &model).map_err(|e| e.to_string())?;
            let expect_masked = matches!((dataset_type, label), (DatasetType::ElicitedLabel, _) | (_, 0));
            let targets = pair.loss_targets();
            let (want_token, want_weight) = if expect_masked { (layout.specials.ign, 0.0) } else { (label, LABEL_WEIGHT) };
            ensure!(
                targets[0] == want_token && pair.loss_weights[0] == want_weight,
                "{dataset_type} label {label}: label target {} weight {}",
                targets[0],
                pair.loss_weights[0]
            );
            ensure!(pair.loss_weights[1..].iter().all(|&w| w == 1.0), "{dataset_type}: semantic weights not 1");
            masked_cells += expect_masked as usize;
        }
    }
    // E_L twice plus label 0 under the three other types.
    ensure!(masked_cells == 5, "{masked_cells} masked cells");
    Ok("5 of 8 cells masked: E_L with any label, label 0 with any type".into())
}

pub fn loss_identities() -> Check {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (len, k) = (r.gen_range(3..12), r.gen_range(2..40));
        let q: Vec<Vec<f64>> = (0..len).map(|_| random_distribution(&mut r, k)).collect();
        let targets: Vec<usize> = (0..len).map(|_| r.gen_range(0..k)).collect();
        let ones = vec![1.0; len];
        let plain = -(0..len).map(|l| q[l][targets[l]].ln()).sum::<f64>() / len as f64;
        let got = smoothed_sequence_loss(&q, &targets, &ones, &SmoothingConfig { epsilon: 0.0, vocab_size: k })
            .map_err(|e| e.to_string())?;
        worst = worst.max((got - plain).abs());

        let cfg = SmoothingConfig { epsilon: 0.1, vocab_size: k };
        let w1: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..5.0)).collect();
        let w2: Vec<f64> = (0..len).map(|_| r.gen_range(0.0..5.0)).collect();
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let doubled: Vec<f64> = w1.iter().map(|w| 2.0 * w).collect();
        let loss = |w: &[f64]| smoothed_sequence_loss(&q, &targets, w, &cfg).map_err(|e| e.to_string());
        let (l1, l2) = (loss(&w1)?, loss(&w2)?);
        ensure!(loss(&doubled)? == 2.0 * l1, "doubling the weights did not double the loss exactly");
        worst = worst.max((loss(&sum)? - (l1 + l2)).abs());
        worst = worst.max((l1 - smoothed_loss_loop(&q, &targets, &w1, 0.1)).abs());
    }
    ensure!(worst <= 1e-12, "sequence loss deviation {worst:e}");

    let acfg = AdvLossConfig { alpha: 0.7 };
    let pts = |r: &mut ChaCha8Rng, n: usize| -> Vec<[f64; 3]> {
        (0..n).map(|_| [r.gen_range(1.0..7.0), r.gen_range(1.0..7.0), r.gen_range(1.0..7.0)]).collect()
    };
    let same = pts(&mut r, 16);
    let zero = adv_predictor_loss(&to_points(&same), &to_points(&same), &to_points(&same), &acfg).map_err(|e| e.to_string())?;
    ensure!(zero == 0.0, "loss at pred = truth = center is {zero}");
    for _ in 0..100 {
        let (p, t, c) = (pts(&mut r, 8), pts(&mut r, 8), pts(&mut r, 8));
        let got = adv_predictor_loss(&to_points(&p), &to_points(&t), &to_points(&c), &acfg).map_err(|e| e.to_string())?;
        ensure!(got > 0.0, "positive loss expected away from the centers");
        let want = adv_loss_loop(&p, &t, &c, acfg.alpha);
        ensure!((got - want).abs() <= 1e-12 * want.max(1.0), "ADV loss {got} vs loop {want}");
    }
    Ok(format!("max sequence-loss deviation {worst:.1e}"))
}

pub fn flow_identities() -> Check {
    let shape = vec![4, 8];
    let x0 = sample_source(shape.clone(), 1.0, 1).map_err(|e| e.to_string())?;
    let x1 = sample_source(shape.clone(), 0.5, 2).map_err(|e| e.to_string())?;
    let exact = FlowConfig { sigma: 0.0, tau: 1.0 };
    let cfg = FlowConfig::default();
    let at = |t: f64, c: &FlowConfig| ot_interpolant(&x0, &x1, t, c).map_err(|e| e.to_string());
    ensure!(at(0.0, &cfg)?.data == x0.data, "t = 0 does not return X0");
    ensure!(at(1.0, &exact)?.data == x1.data, "t = 1, sigma = 0 does not return X1");

    let target = ot_target_field(&x0, &x1, &cfg).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let t = i as f64 / 10.0;
        let (hi, lo) = (at(t + h, &cfg)?, at(t - h, &cfg)?);
        for j in 0..target.len() {
            worst = worst.max(((hi.data[j] - lo.data[j]) / (2.0 * h) - target.data[j]).abs());
        }
    }
    ensure!(worst <= 1e-6, "finite difference deviates by {worst:e}");
    let loss = cfm_loss(&target, &x0, &x1, &cfg).map_err(|e| e.to_string())?;
    ensure!(loss == 0.0, "cfm_loss at the target is {loss}");

    let mut detail = Vec::new();
    for tau in [1.0, 4.0] {
        let noise: Tensor = sample_source(vec![100_000], tau, 77).map_err(|e| e.to_string())?;
        let n = noise.len() as f64;
        let mean = noise.data.iter().sum::<f64>() / n;
        let var = noise.data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let rel = (var * tau - 1.0).abs();
        ensure!(rel < 0.02, "tau = {tau}: variance {var} off by {:.2}%", 100.0 * rel);
        detail.push(format!("var(tau={tau}) = {var:.4}"));
    }
    Ok(format!("max FD error {worst:.1e}; {}", detail.join(", ")))
}

pub fn metric_identities() -> Check {
    let id = Ranking::identity(14);
    ensure!(spearman_src(&id, &id).map_err(|e| e.to_string())? == 1.0, "SRC(identical) != 1");
    ensure!(spearman_src(&id, &id.reversed()).map_err(|e| e.to_string())? == -1.0, "SRC(reversed) != -1");
    let mut r = rng(12);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = r.gen_range(2..=20);
        let (x, y) = (random_permutation(&mut r, n), random_permutation(&mut r, n));
        let src = spearman_src(&Ranking::new(x.clone()).unwrap(), &Ranking::new(y.clone()).unwrap())
            .map_err(|e| e.to_string())?;
        let fx: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        worst = worst.max((src - pearson(&fx, &fy)).abs());
    }
    ensure!(worst <= 1e-12, "SRC vs Pearson-of-ranks deviation {worst:e}");
    for n in 2..=20 {
        let ranking = Ranking::new(random_permutation(&mut r, n)).unwrap();
        for k in 2..=12 {
            let w = kendalls_w(&vec![ranking.clone(); k]).map_err(|e| e.to_string())?;
            ensure!((w - 1.0).abs() <= 1e-12, "W = {w} for {k} unanimous raters, n = {n}");
        }
    }
    let cm = ConfusionMatrix::new(vec![vec![5, 5], vec![0, 10]]).map_err(|e| e.to_string())?;
    let s = macro_pr(&cm).map_err(|e| e.to_string())?;
    ensure!((s.precision - 5.0 / 6.0).abs() <= 1e-9 && (s.recall - 0.75).abs() <= 1e-9, "macro P/R {:?}", (s.precision, s.recall));
    Ok(format!("SRC vs Pearson max deviation {worst:.1e}; macro P/R ({:.4}, {:.4})", s.precision, s.recall))
}

/// 20 lines: one malformed, a 31 s clip, an exact 30 s clip, an empty
/// transcript, the `Unknown` speaker, and two speakers pushed below four
/// utterances (one only after its long clip is dropped).
pub fn crafted_manifest() -> String {
    let mut lines = Vec::new();
    for i in 0..5 {
        lines.push(manifest_line(&format!("keep5_{i}"), "spk_a", if i == 4 { 31.0 } else { 3.0 }, &[1, 2]));
    }
    for i in 0..5 {
        let (dur, tokens): (f64, &[u32]) = match i {
            0 => (31.0, &[1]),
            1 => (2.0, &[]),
            _ => (2.0, &[3, 4]),
        };
        lines.push(manifest_line(&format!("cascade_{i}"), "spk_b", dur, tokens));
    }
    for i in 0..3 {
        lines.push(manifest_line(&format!("sparse_{i}"), "spk_c", 4.0, &[5]));
    }
    for i in 0..2 {
        lines.push(manifest_line(&format!("anon_{i}"), "Unknown", 4.0, &[6]));
    }
    for i in 0..4 {
        lines.push(manifest_line(&format!("edge_{i}"), "spk_d", if i == 0 { 30.0 } else { 5.0 }, &[7]));
    }
    lines.push(r#"{"id":"broken","dataset":"toy","dataset_type":"S_AL","speaker":"spk_d","label":"Happy","duration_s":-1.0,"text_token_ids":[1]}"#.into());
    assert_eq!(lines.len(), 20);
    lines.join("\n") + "\n"
}

pub fn ingest_rules() -> Check {
    let parsed = ingest::parse_manifest(&crafted_manifest());
    ensure!(parsed.malformed.len() == 1, "{} malformed lines", parsed.malformed.len());
    let out = ingest::clean_manifest(parsed.rows, &CleaningPolicy::default());
    let reason = |id: &str| {
        out.rejected.iter().find_map(|r| match &r.row {
            RejectedRow::Row(row) if row.id == id => Some(r.reason),
            _ => None,
        })
    };
    ensure!(reason("keep5_4") == Some(RejectReason::Duration), "31 s clip: {:?}", reason("keep5_4"));
    ensure!(reason("edge_0").is_none(), "30 s clip rejected as {:?}", reason("edge_0"));
    ensure!(reason("cascade_0") == Some(RejectReason::Duration), "cascade_0: {:?}", reason("cascade_0"));
    ensure!(reason("cascade_1") == Some(RejectReason::NoTranscript), "cascade_1: {:?}", reason("cascade_1"));
    for id in ["cascade_2", "cascade_3", "cascade_4", "sparse_0", "sparse_1", "sparse_2"] {
        ensure!(reason(id) == Some(RejectReason::SparseSpeaker), "{id}: {:?}", reason(id));
    }
    ensure!(reason("anon_0") == Some(RejectReason::UnknownSpeaker), "anon_0: {:?}", reason("anon_0"));
    let mut kept: Vec<&str> = out.kept.iter().map(|r| r.id.as_str()).collect();
    kept.sort();
    let want = ["edge_0", "edge_1", "edge_2", "edge_3", "keep5_0", "keep5_1", "keep5_2", "keep5_3"];
    ensure!(kept == want, "kept {kept:?}");
    ensure!(out.kept.len() + out.rejected.len() + parsed.malformed.len() == 20, "rows lost");
    Ok(format!("{} kept, {} rejected, 1 malformed", out.kept.len(), out.rejected.len()))
}
