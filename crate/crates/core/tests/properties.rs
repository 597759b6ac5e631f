mod common;

use proptest::prelude::*;

use spa_core::dataset::{
    parse_dataset, parse_feature_vector, render_dataset, render_feature_vector,
    validate_for_prediction, FeatureVector, Label, LabeledDataset, Spectrum,
};
use spa_core::evaluate::{
    balanced_accuracy, make_folds, match_features, sensitivity, specificity, ConfusionCounts,
    LinearModel,
};
use spa_core::preprocess::{normalize_tic, opening, smooth_spectrum, standardize};
use spa_core::selector::{
    connected_components, hard_threshold, project_support, sparsify_components, OneBitProblem,
};
use spa_core::simulate::GroundTruth;

use common::{dot, onebit_dual_value};

fn vec_strategy(d: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    d.prop_flat_map(|d| prop::collection::vec(-10.0f64..10.0, d))
}

fn nonzero(c: &[f64]) -> bool {
    c.iter().any(|v| v.abs() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn onebit_feasible_and_optimal(c in vec_strategy(2..11), frac in 0.01f64..1.0) {
        prop_assume!(nonzero(&c));
        let root = frac * (c.len() as f64).sqrt();
        let sol = OneBitProblem::new(c.clone()).unwrap().solve(root * root, 1e-12).unwrap();
        prop_assert!(sol.omega.l1_norm() <= root + 1e-9);
        prop_assert!(sol.omega.l2_norm() <= 1.0 + 1e-9);
        prop_assert!(sol.objective >= onebit_dual_value(&c, root) - 1e-6);
        for (w, cv) in sol.omega.weights().iter().zip(&c) {
            if *w != 0.0 {
                prop_assert_eq!(w.signum(), cv.signum());
            }
        }
    }

    #[test]
    fn onebit_direction_ignores_scale(c in vec_strategy(2..11), frac in 0.05f64..1.0, alpha in 0.01f64..100.0) {
        prop_assume!(nonzero(&c));
        let lambda = (frac * (c.len() as f64).sqrt()).powi(2);
        let a = OneBitProblem::new(c.clone()).unwrap().solve(lambda, 1e-12).unwrap();
        let scaled: Vec<f64> = c.iter().map(|v| v * alpha).collect();
        let b = OneBitProblem::new(scaled).unwrap().solve(lambda, 1e-12).unwrap();
        for (x, y) in a.omega.weights().iter().zip(b.omega.weights()) {
            prop_assert!((x - y).abs() < 1e-7);
        }
    }

    #[test]
    fn onebit_l1_nests(c in vec_strategy(2..11), f1 in 0.01f64..1.0, f2 in 0.01f64..1.0) {
        prop_assume!(nonzero(&c));
        let d = c.len() as f64;
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let p = OneBitProblem::new(c).unwrap();
        let a = p.solve(lo * lo * d, 1e-12).unwrap();
        let b = p.solve(hi * hi * d, 1e-12).unwrap();
        prop_assert!(a.omega.l1_norm() <= b.omega.l1_norm() + 1e-9);
    }

    #[test]
    fn ratio_non_increasing(c in vec_strategy(2..20)) {
        prop_assume!(nonzero(&c));
        let p = OneBitProblem::new(c).unwrap();
        let m = p.max_abs();
        let mut prev = f64::INFINITY;
        for k in 0..200 {
            let r = p.ratio_at(m * k as f64 / 200.0);
            prop_assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn sparsify_keeps_one_argmax_per_component(w in vec_strategy(1..60), eps in 0.0f64..5.0) {
        let thr = hard_threshold(&FeatureVector::new(w.clone()), eps);
        for (t, v) in thr.weights().iter().zip(&w) {
            prop_assert!(*t == 0.0 || (v.abs() > eps && t == v));
        }
        let comps = connected_components(thr.support());
        let sparse = sparsify_components(&thr);
        prop_assert_eq!(sparse.nnz(), comps.len());
        for (range, &k) in comps.iter().zip(sparse.support()) {
            prop_assert!(range.contains(&k));
            let best = range.clone().map(|j| thr.weights()[j].abs()).fold(0.0, f64::max);
            prop_assert_eq!(thr.weights()[k].abs(), best);
            prop_assert!(range.clone().filter(|&j| thr.weights()[j].abs() == best).all(|j| j >= k));
        }
        prop_assert_eq!(sparsify_components(&sparse), sparse);
    }

    #[test]
    fn projection_idempotent_and_linear(
        x in prop::collection::vec(-5.0f64..5.0, 12),
        z in prop::collection::vec(-5.0f64..5.0, 12),
        support in prop::collection::btree_set(0usize..12, 0..6),
        a in -3.0f64..3.0,
    ) {
        let support: Vec<usize> = support.into_iter().collect();
        let sx = Spectrum::from_intensities(x.clone()).unwrap();
        let px = project_support(&sx, &support).unwrap();
        prop_assert_eq!(&project_support(&px, &support).unwrap(), &px);
        let mix: Vec<f64> = x.iter().zip(&z).map(|(u, v)| a * u + v).collect();
        let pm = project_support(&Spectrum::from_intensities(mix).unwrap(), &support).unwrap();
        let pz = project_support(&Spectrum::from_intensities(z).unwrap(), &support).unwrap();
        for ((m, u), v) in pm.intensities().iter().zip(px.intensities()).zip(pz.intensities()) {
            prop_assert!((m - (a * u + v)).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_is_linear(
        x in prop::collection::vec(-5.0f64..5.0, 40),
        z in prop::collection::vec(-5.0f64..5.0, 40),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        sigma in 0.3f64..4.0,
    ) {
        let s = |v: Vec<f64>| smooth_spectrum(&Spectrum::from_intensities(v).unwrap(), sigma).unwrap();
        let mix: Vec<f64> = x.iter().zip(&z).map(|(u, v)| a * u + b * v).collect();
        let sm = s(mix);
        let (sx, sz) = (s(x), s(z));
        for ((m, u), v) in sm.intensities().iter().zip(sx.intensities()).zip(sz.intensities()) {
            prop_assert!((m - (a * u + b * v)).abs() < 1e-9);
        }
    }

    #[test]
    fn smoothing_commutes_with_shift(pos in 20usize..40, shift in 1usize..10, sigma in 0.5f64..3.0) {
        let impulse = |p: usize| {
            let mut v = vec![0.0; 80];
            v[p] = 1.0;
            smooth_spectrum(&Spectrum::from_intensities(v).unwrap(), sigma).unwrap()
        };
        let a = impulse(pos);
        let b = impulse(pos + shift);
        for k in 0..80 - shift {
            prop_assert!((a.intensities()[k] - b.intensities()[k + shift]).abs() < 1e-12);
        }
    }

    #[test]
    fn tophat_output_is_its_own_residual(x in prop::collection::vec(0.0f64..10.0, 10..60), half in 1usize..5) {
        let window = 2 * half + 1;
        let open = opening(&x, window).unwrap();
        let residual: Vec<f64> = x.iter().zip(&open).map(|(v, o)| v - o).collect();
        let again = opening(&residual, window).unwrap();
        let twice: Vec<f64> = residual.iter().zip(&again).map(|(v, o)| v - o).collect();
        for (a, b) in residual.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tic_and_standardize(rows in prop::collection::vec(prop::collection::vec(0.1f64..10.0, 6), 4..10)) {
        let labels: Vec<Label> = (0..rows.len())
            .map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative })
            .collect();
        let ds = LabeledDataset::from_rows(&rows, labels).unwrap();
        let tic = normalize_tic(&ds).unwrap();
        for row in tic.data().rows() {
            prop_assert!((row.iter().map(|v| v.abs()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let (z, _) = standardize(&ds).unwrap();
        let (_, stats) = standardize(&z).unwrap();
        for j in 0..6 {
            if !stats.constant_mask[j] {
                prop_assert!(stats.mean[j].abs() < 1e-10);
                prop_assert!((stats.std[j] - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn prediction_validation_counts_non_finite(
        x in prop::collection::vec(-5.0f64..5.0, 1..30),
        holes in prop::collection::vec((0usize..30, 0u8..3), 0..5),
    ) {
        let mut x = x;
        let mut bad = std::collections::BTreeSet::new();
        for (k, kind) in holes {
            let k = k % x.len();
            x[k] = [f64::NAN, f64::INFINITY, f64::NEG_INFINITY][kind as usize];
            bad.insert(k);
        }
        let res = validate_for_prediction(&Spectrum::from_intensities(x).unwrap());
        prop_assert_eq!(res.is_ok(), bad.is_empty());
    }

    #[test]
    fn feature_vector_round_trip(w in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 1..40)) {
        let fv = FeatureVector::new(w.clone());
        let channels: Vec<f64> = (0..w.len()).map(|k| 100.0 + 0.5 * k as f64).collect();
        let text = render_feature_vector(&fv, &channels).unwrap();
        let back = parse_feature_vector(&text, "mem").unwrap();
        let support_channels: Vec<f64> = fv.support().iter().map(|&k| channels[k]).collect();
        prop_assert_eq!(back.channels, support_channels);
        prop_assert_eq!(back.vector.d(), w.len());
        for (a, b) in back.vector.weights().iter().zip(&w) {
            if *b == 0.0 {
                prop_assert_eq!(*a, 0.0);
            } else {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn dataset_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 5), 1..12)) {
        let labels: Vec<Label> = (0..rows.len())
            .map(|i| if i % 3 == 0 { Label::Negative } else { Label::Positive })
            .collect();
        let ds = LabeledDataset::from_rows(&rows, labels).unwrap();
        prop_assert_eq!(parse_dataset(&render_dataset(&ds), "mem").unwrap(), ds);
    }

    #[test]
    fn folds_partition(n in 2usize..200, k in 2usize..10, seed in 0u64..1000, rep in 0usize..5) {
        prop_assume!(k <= n);
        let folds = make_folds(n, k, seed, rep);
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn decision_sign_ignores_scale(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        b in -3.0f64..3.0,
        x in prop::collection::vec(-3.0f64..3.0, 4),
        alpha in 0.001f64..1000.0,
    ) {
        let m = LinearModel { w: w.clone(), b, iterations: 0, converged: true };
        let s = LinearModel { w: w.iter().map(|v| v * alpha).collect(), b: b * alpha, iterations: 0, converged: true };
        prop_assert_eq!(m.predict(&x), s.predict(&x));
        prop_assert_eq!(m.decision(&x).signum(), s.decision(&x).signum());
        prop_assert!((s.decision(&x) - alpha * dot(&m.w, &x) - alpha * b).abs() < 1e-6 * alpha.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_formulas(tp in 0usize..50, fp in 0usize..200, tn in 0usize..200, fn_ in 0usize..50) {
        let c = ConfusionCounts { tp, fp, tn, fn_ };
        match sensitivity(&c) {
            Ok(s) => prop_assert_eq!(s, tp as f64 / (tp + fn_) as f64),
            Err(_) => prop_assert_eq!(tp + fn_, 0),
        }
        match specificity(&c) {
            Ok(s) => prop_assert_eq!(s, tn as f64 / (tn + fp) as f64),
            Err(_) => prop_assert_eq!(tn + fp, 0),
        }
        if let Ok(b) = balanced_accuracy(&c) {
            prop_assert_eq!(b, (sensitivity(&c).unwrap() + specificity(&c).unwrap()) / 2.0);
            prop_assert!((0.0..=1.0).contains(&b));
        }
    }
}

pub fn truth_for(centers: Vec<usize>, num_peaks: usize) -> GroundTruth {
    let mut omega0 = vec![0.0; 2048];
    for &c in &centers {
        omega0[c] = 1.0;
    }
    GroundTruth {
        omega0: FeatureVector::new(omega0),
        positive_peaks: (0..centers.len()).collect(),
        true_peak_centers: centers,
        peak_width: 10.0,
        all_peak_centers: (0..num_peaks).map(|m| m * 10).collect(),
        correlated_pairs: vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matching_monotone_in_tolerance(
        centers in prop::collection::btree_set(0usize..2000, 1..8),
        selected in prop::collection::vec(0usize..2000, 0..15),
        tol in 0usize..40,
        extra in 1usize..40,
    ) {
        let truth = truth_for(centers.into_iter().collect(), 200);
        let a = match_features(&selected, &truth, tol);
        let b = match_features(&selected, &truth, tol + extra);
        prop_assert!(b.tp >= a.tp);
        for c in [a, b] {
            prop_assert_eq!(c.tp + c.fn_, truth.true_peak_centers.len());
            prop_assert_eq!(c.fp + c.tn, 200 - truth.true_peak_centers.len());
        }
        let exact = match_features(&truth.true_peak_centers, &truth, 0);
        prop_assert_eq!((exact.tp, exact.fp, exact.fn_), (truth.true_peak_centers.len(), 0, 0));
    }
}
