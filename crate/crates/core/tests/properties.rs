//! Invariants checked against independently written oracles.

use multidx_core::audio::{extract_features, magnitude_spectrum, AudioClip};
use multidx_core::cnn::{cross_entropy, softmax};
use multidx_core::imaging::{convex_hull, convex_hull_crop, rasterize_spectrum, GrayImage};
use multidx_core::learners::{fit_dense, Hyperparameters, LearnerKind, LearnerSpec};
use multidx_core::metrics::{compute_metrics, evaluate, ConfusionMatrix};
use multidx_core::stacking::{fold_assignment, out_of_fold, StackSpec};
use multidx_core::tabular::{
    impute_knn, pearson_matrix, scale_standard, smote_balance, split_indices, FeatureFrame, FeatureSchema, SplitSpec,
};
use multidx_core::Matrix;
use proptest::prelude::*;

mod oracles;
use oracles::*;

const CLASSES: [&str; 2] = ["neg", "pos"];

fn frame(rows: Vec<Vec<Option<f64>>>, labels: Option<Vec<usize>>) -> FeatureFrame {
    let width = rows[0].len();
    FeatureFrame::new(FeatureSchema::numeric(width, &CLASSES), rows, labels).unwrap()
}

// ---------------------------------------------------------------- metrics

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn f1_lies_between_precision_and_recall(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
        prop_assume!(tp + tn + fp + fn_ > 0);
        let m = compute_metrics(&ConfusionMatrix::new(tp, tn, fp, fn_));
        if let (Some(p), Some(r), Some(f)) = (m.precision, m.recall, m.f1) {
            prop_assert!(p.min(r) - 1e-12 <= f && f <= p.max(r) + 1e-12);
            prop_assert!(f <= (p + r) / 2.0 + 1e-12);
        }
        let acc = m.accuracy.unwrap();
        prop_assert!((acc - (tp + tn) as f64 / (tp + tn + fp + fn_) as f64).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn metrics_survive_label_permutation(pairs in prop::collection::vec((0usize..2, 0usize..2), 1..60)) {
        let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let flip = |v: &[usize]| v.iter().map(|&x| 1 - x).collect::<Vec<_>>();
        prop_assert_eq!(evaluate(&t, &p, 1).unwrap(), evaluate(&flip(&t), &flip(&p), 0).unwrap());
    }
}

// ---------------------------------------------------------------- imputer

fn gappy_frame() -> impl Strategy<Value = Vec<Vec<Option<f64>>>> {
    (1usize..=6, 2usize..=20).prop_flat_map(|(w, n)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.75, -10.0f64..10.0), w), n)
            .prop_filter("each row and column has an observation", move |rows| {
                rows.iter().all(|r| r.iter().any(Option::is_some))
                    && (0..w).all(|c| rows.iter().any(|r| r[c].is_some()))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn imputer_matches_brute_force(rows in gappy_frame(), k in 1usize..7) {
        let out = impute_knn(&frame(rows.clone(), None), k).unwrap();
        let want = impute_oracle(&rows, k);
        for (r, want_row) in want.iter().enumerate() {
            for (c, w) in want_row.iter().enumerate() {
                let got = out.get(r, c).unwrap();
                prop_assert!((got - w).abs() <= 1e-9, "cell ({r},{c}): {got} vs {w}");
            }
        }
    }
}

// ---------------------------------------------------------------- SMOTE

fn labeled_points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (1usize..=4, 2usize..=8, 9usize..=20).prop_flat_map(|(w, minority, majority)| {
        let n = minority + majority;
        (prop::collection::vec(prop::collection::vec(-5.0f64..5.0, w), n), Just(minority), Just(n))
            .prop_map(|(rows, minority, n)| (rows, (0..n).map(|i| usize::from(i < minority)).collect()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn smote_rows_lie_on_minority_segments((rows, labels) in labeled_points(), seed in any::<u64>()) {
        let n = rows.len();
        let input = frame(rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(), Some(labels.clone()));
        let out = smote_balance(&input, 5, seed).unwrap();
        let counts = out.class_counts().unwrap();
        prop_assert_eq!(counts[0], counts[1]);
        for r in 0..n {
            prop_assert_eq!(out.row(r), input.row(r));
        }
        let minority: Vec<&Vec<f64>> = rows.iter().zip(&labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).collect();
        for r in n..out.n_rows() {
            prop_assert_eq!(out.labels().unwrap()[r], 1);
            let x: Vec<f64> = out.row(r).iter().map(|v| v.unwrap()).collect();
            let on_segment = on_minority_segment(&x, &minority, 1e-9);
            prop_assert!(on_segment, "synthetic row {r} is not between two minority rows");
        }
    }
}

// ---------------------------------------------------------------- scaling, correlation, splits

proptest! {
    #[test]
    fn scaling_inverts_and_standardises(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 3), 2..30)) {
        let f = frame(rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(), None);
        let (scaled, _, scaler) = scale_standard(&f, &[]).unwrap();
        let m = scaled.to_matrix().unwrap();
        for c in 0..3 {
            let col = m.column(c);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
        for (r, orig) in rows.iter().enumerate() {
            let mut back = m.row(r).to_vec();
            scaler.inverse_row(&mut back);
            for (a, b) in back.iter().zip(orig) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pearson_is_a_correlation_matrix(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..40)) {
        let labels = (0..rows.len()).map(|i| i % 2).collect();
        let f = frame(rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect(), Some(labels));
        let (names, r) = pearson_matrix(&f).unwrap();
        prop_assert_eq!(names.len(), 4);
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!(r.get(i, j).abs() <= 1.0 + 1e-12);
                prop_assert_eq!(r.get(i, j), r.get(j, i));
            }
        }
        prop_assert!((r.get(3, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn splits_partition_every_row(labels in prop::collection::vec(0usize..3, 12..120), seed in any::<u64>(), three in any::<bool>()) {
        let spec = if three { SplitSpec::three_way(0.7, 0.2, seed) } else { SplitSpec::train_test(0.7, seed) };
        let Ok(s) = split_indices(&labels, 3, spec) else { return Ok(()) };
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        prop_assert_eq!(split_indices(&labels, 3, spec).unwrap(), s);
    }
}

// ---------------------------------------------------------------- imaging

fn binary_image() -> impl Strategy<Value = GrayImage> {
    (3usize..24, 3usize..24).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.2), w * h).prop_map(move |bits| {
            GrayImage::new(w, h, bits.into_iter().map(|b| if b { 0.0 } else { 1.0 }).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hull_crop_is_idempotent_and_contains_foreground(img in binary_image()) {
        let pts = dark_points(&img);
        let Ok(once) = convex_hull_crop(&img) else { return Ok(()) };
        prop_assert_eq!(convex_hull_crop(&once).unwrap(), once.clone());
        let hull = convex_hull(&pts);
        for &p in &pts {
            prop_assert!(inside_hull(&hull, p), "{p:?} outside the hull");
        }
        let xs = pts.iter().map(|p| p.0);
        let ys = pts.iter().map(|p| p.1);
        let w = (xs.clone().max().unwrap() - xs.min().unwrap() + 1) as usize;
        let h = (ys.clone().max().unwrap() - ys.min().unwrap() + 1) as usize;
        prop_assert_eq!((once.width, once.height), (w, h));
    }

    #[test]
    fn rasterize_ignores_positive_affine_maps(
        spec in prop::collection::vec(-100.0f64..100.0, 2..300),
        a in 0.01f64..50.0,
        b in -100.0f64..100.0,
        res in prop::sample::select(vec![16usize, 32, 64]),
    ) {
        let moved: Vec<f64> = spec.iter().map(|v| a * v + b).collect();
        let (p, q) = (rasterize_spectrum(&spec, res).unwrap(), rasterize_spectrum(&moved, res).unwrap());
        prop_assert_eq!(&p, &q);
        for x in 0..res {
            prop_assert!((0..res).any(|y| p.get(x, y) == 0.0));
        }
    }
}

// ---------------------------------------------------------------- audio

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_scale_with_amplitude(samples in prop::collection::vec(-1.0f64..1.0, 256..1024), a in 0.05f64..1.0) {
        let base = extract_features(&AudioClip::new(samples.clone(), 8000).unwrap()).unwrap();
        let scaled = extract_features(&AudioClip::new(samples.iter().map(|v| v * a).collect(), 8000).unwrap()).unwrap();
        for (x, y) in [(base.minimum, scaled.minimum), (base.maximum, scaled.maximum), (base.mean, scaled.mean), (base.std_dev, scaled.std_dev)] {
            prop_assert!((x * a - y).abs() < 1e-9);
        }
        prop_assert!((base.skewness - scaled.skewness).abs() < 1e-9);
        prop_assert!((base.kurtosis - scaled.kurtosis).abs() < 1e-9);
        prop_assert_eq!(base.dominant_frequency, scaled.dominant_frequency);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_spectrum_matches_naive_dft(samples in prop::collection::vec(-1.0f64..1.0, 2..4096)) {
        let fast = magnitude_spectrum(&samples);
        prop_assert_eq!(fast.len(), samples.len() / 2 + 1);
        let err = spectrum_error(&fast, &samples);
        prop_assert!(err <= 1e-6, "relative error {err}");
    }
}

// ---------------------------------------------------------------- networks and learners

proptest! {
    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-800.0f64..800.0, 1..12), t in 0usize..12) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(cross_entropy(&p, t % z.len()) >= 0.0);
    }
}

fn blob_data() -> impl Strategy<Value = (Matrix, Vec<usize>)> {
    prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 3), 0usize..3), 12..40)
        .prop_filter("every class present", |pts| (0..3).all(|c| pts.iter().filter(|p| p.1 == c).count() >= 2))
        .prop_map(|pts| {
            let rows: Vec<Vec<f64>> = pts.iter().map(|(x, c)| x.iter().map(|v| v + *c as f64).collect()).collect();
            (Matrix::from_rows(&rows), pts.iter().map(|p| p.1).collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_learner_emits_distributions((x, y) in blob_data(), seed in any::<u64>()) {
        for kind in LearnerKind::ALL {
            let mut spec = LearnerSpec::new(kind, seed);
            if let Hyperparameters::Forest(p) = &mut spec.params {
                p.n_estimators = 25;
            }
            let model = fit_dense(&spec, &x, &y, 3).unwrap();
            let p = model.predict_proba_dense(&x).unwrap();
            for r in 0..p.rows() {
                let s: f64 = p.row(r).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9, "{kind:?} row {r} sums to {s}");
                prop_assert!(p.row(r).iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
            }
            prop_assert_eq!(&model.predict_proba_dense(&x).unwrap(), &p);
        }
    }

    #[test]
    fn out_of_fold_covers_each_row_once((x, y) in blob_data(), seed in any::<u64>()) {
        let folds = fold_assignment(&y, 3, 5, seed);
        prop_assert_eq!(folds.len(), y.len());
        prop_assert!(folds.iter().all(|&f| f < 5));
        let spec = StackSpec::new(&[LearnerKind::GaussianNaiveBayes, LearnerKind::KNearestNeighbors], LearnerKind::LogisticRegression, seed);
        let oof = out_of_fold(&spec, &x, &y, 3).unwrap();
        prop_assert_eq!(oof.rows(), y.len());
        prop_assert!(oof.as_slice().iter().all(|v| v.is_finite()));
    }
}

// ---------------------------------------------------------------- shapes and artifacts

proptest! {
    #[test]
    fn pooling_halves_and_convolution_preserves(h in 1usize..900, w in 1usize..900) {
        use multidx_core::cnn::{default_architecture, infer_shapes};
        let shapes = infer_shapes([h, w, 1], &default_architecture(2)).unwrap();
        let (mut eh, mut ew) = (h, w);
        for (i, s) in shapes.iter().take(9).enumerate() {
            if i % 3 == 2 {
                eh = eh.div_ceil(2);
                ew = ew.div_ceil(2);
            }
            prop_assert_eq!((s[0], s[1]), (eh, ew));
        }
        prop_assert_eq!(shapes[9][0], eh * ew * 64);
    }
}

fn small_artifact() -> multidx_core::modelstore::ModelArtifact {
    use multidx_core::cnn::{default_architecture, CnnModel};
    use multidx_core::modelstore::{ImagePipeline, ModelArtifact, Payload, Preprocessing};
    ModelArtifact {
        mode: multidx_core::Mode::Ecg,
        preset_id: "exp5".into(),
        class_names: vec!["neg".into(), "pos".into()],
        preprocessing: Preprocessing::Image { side: 8, pipeline: ImagePipeline::Report },
        payload: Payload::Cnn(CnnModel::new([8, 8, 1], &default_architecture(2), 7).unwrap()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn corrupted_files_fail_cleanly(pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        use multidx_core::modelstore::ModelArtifact;
        let bytes = small_artifact().to_bytes().unwrap();
        let mut bad = bytes.clone();
        let i = pos.index(bad.len());
        bad[i] ^= 1 << bit;
        prop_assert!(ModelArtifact::from_bytes(&bad).is_err());
        let cut = pos.index(bytes.len());
        prop_assert!(ModelArtifact::from_bytes(&bytes[..cut]).is_err());
    }
}
