mod common;

use fusegraph::dataset::{FeatureTable, SampleId};
use fusegraph::learn::{
    concat_features, fit_binary, majority_vote, predict_label, predict_proba, train_classifier,
    Estimator, Objective, TrainConfig,
};
use fusegraph::sparse::SparseVector;
use fusegraph::Error;
use proptest::prelude::*;

fn sv(values: &[f64]) -> SparseVector {
    SparseVector::from_dense(values).unwrap()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn estimator(classes: usize, dim: usize, params: &[f64]) -> Estimator {
    let weights: Vec<Vec<f64>> = (0..classes)
        .map(|c| params[c * dim..(c + 1) * dim].to_vec())
        .collect();
    let biases = params[classes * dim..classes * dim + classes].to_vec();
    Estimator::from_parts(
        (0..classes).map(|c| format!("k{c}")).collect(),
        weights,
        biases,
    )
    .unwrap()
}

#[test]
fn prediction_examples() {
    let e = Estimator::from_parts(
        strings(&["a", "b"]),
        vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        vec![1.0, 0.0],
    )
    .unwrap();
    assert_eq!(predict_label(&e, &sv(&[3.0, -2.0])).unwrap(), "a");

    let e = Estimator::from_parts(
        strings(&["a", "b", "c"]),
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
        vec![0.0; 3],
    )
    .unwrap();
    assert_eq!(predict_label(&e, &sv(&[0.0, 1.0, 0.0])).unwrap(), "b");
    let uniform = predict_proba(&e, &SparseVector::zeros(3)).unwrap();
    assert!(uniform.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    assert!(matches!(
        predict_label(&e, &sv(&[1.0])),
        Err(Error::Shape { .. })
    ));

    let binary = Estimator::from_parts(strings(&["n", "p"]), vec![vec![1.0]], vec![0.0]).unwrap();
    assert_eq!(
        predict_proba(&binary, &SparseVector::zeros(1)).unwrap(),
        [0.5, 0.5]
    );
    let p = predict_proba(&binary, &sv(&[1e6])).unwrap();
    assert!((p[1] - 1.0).abs() < 1e-6);
}

#[test]
fn training_examples() {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..12 {
        let t = 1.0 + i as f64 / 4.0;
        x.push(sv(&[t, 0.5]));
        y.push("pos".to_string());
        x.push(sv(&[-t, 0.5]));
        y.push("neg".to_string());
    }
    let cfg = TrainConfig {
        reg_grid: vec![1e-3],
        folds: 3,
        ..TrainConfig::default()
    };
    let e = train_classifier(&x, &y, &cfg).unwrap();
    let pred: Vec<&str> = x.iter().map(|v| predict_label(&e, v).unwrap()).collect();
    assert_eq!(pred, y);

    let mut x = Vec::new();
    let mut y = Vec::new();
    for c in 0..3 {
        for _ in 0..10 {
            let mut row = vec![0.0; 3];
            row[c] = 1.0;
            x.push(sv(&row));
            y.push(format!("c{c}"));
        }
    }
    let cfg = TrainConfig::default();
    let e = train_classifier(&x, &y, &cfg).unwrap();
    assert!(e.grid_scores.iter().all(|(_, s)| *s == 1.0));
    // ties choose the smallest strength
    assert_eq!(e.reg, cfg.reg_grid[0]);
    let again = train_classifier(&x, &y, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&e).unwrap(),
        serde_json::to_string(&again).unwrap()
    );

    assert!(matches!(
        train_classifier(&x[..10], &y[..10], &cfg),
        Err(Error::DegenerateLabels(_))
    ));
}

#[test]
fn selected_strength_has_the_best_score() {
    let x: Vec<SparseVector> = (0..40)
        .map(|i| {
            sv(&[
                (i as f64 * 0.7).sin(),
                (i as f64 * 1.3).cos(),
                (i % 4) as f64,
            ])
        })
        .collect();
    let y: Vec<String> = (0..40)
        .map(|i| {
            if (i as f64 * 0.7).sin() + 0.3 * (i % 4) as f64 > 0.4 {
                "a"
            } else {
                "b"
            }
            .to_string()
        })
        .collect();
    let cfg = TrainConfig {
        reg_grid: vec![1e-4, 1e-2, 1.0, 10.0],
        folds: 4,
        ..TrainConfig::default()
    };
    let e = train_classifier(&x, &y, &cfg).unwrap();
    let chosen = e.grid_scores.iter().find(|(r, _)| *r == e.reg).unwrap().1;
    assert!(e.grid_scores.iter().all(|(_, s)| *s <= chosen + 1e-12));
}

#[test]
fn baseline_examples() {
    let a = FeatureTable::from_rows(
        "a",
        1,
        [("p", 0.0), ("q", 10.0), ("t", 10.0)].map(|(i, v)| (SampleId::new(i), vec![v])),
    )
    .unwrap();
    let b = FeatureTable::from_rows(
        "b",
        1,
        [("p", 15.0), ("q", 5.0), ("t", 5.0)].map(|(i, v)| (SampleId::new(i), vec![v])),
    )
    .unwrap();
    let (c, _) = concat_features(&[&a, &b], &["p".into(), "q".into()]).unwrap();
    assert_eq!(c.row(&"t".into()).unwrap(), &[1.0, 0.0]);

    assert_eq!(
        majority_vote(&[strings(&["a"]), strings(&["a"]), strings(&["b"])]).unwrap(),
        strings(&["a"])
    );
    assert_eq!(
        majority_vote(&[strings(&["a"]), strings(&["b"]), strings(&["c"])]).unwrap(),
        strings(&["a"])
    );
    assert!(matches!(
        majority_vote(&[strings(&["a"]), strings(&["b"])]),
        Err(Error::Arity(_))
    ));
}

proptest! {
    #[test]
    fn argmax_survives_monotone_rescaling(
        params in prop::collection::vec(-3.0f64..3.0, 3 * 4 + 3),
        x in prop::collection::vec(-2.0f64..2.0, 4),
        scale in 0.01f64..100.0,
    ) {
        let e = estimator(3, 4, &params);
        let scaled: Vec<f64> = params.iter().map(|p| p * scale).collect();
        let s = estimator(3, 4, &scaled);
        let v = sv(&x);
        prop_assert_eq!(predict_label(&e, &v).unwrap(), predict_label(&s, &v).unwrap());
    }

    #[test]
    fn probabilities_lie_on_the_simplex(
        params in prop::collection::vec(-30.0f64..30.0, 4 * 3 + 4),
        x in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let p = predict_proba(&estimator(4, 3, &params), &sv(&x)).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn full_batch_loss_never_increases(seed in any::<u64>(), hinge in any::<bool>()) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let x: Vec<SparseVector> = (0..30).map(|_| sv(&[r.gen_range(-1.0..1.0), r.gen_range(0.0..1.0), r.gen_range(-2.0..2.0)])).collect();
        let t: Vec<bool> = (0..30).map(|_| r.gen_bool(0.5)).collect();
        let rows: Vec<&SparseVector> = x.iter().collect();
        let objective = if hinge { Objective::Hinge } else { Objective::Logistic };
        let cfg = TrainConfig { objective, max_epochs: 100, tolerance: 0.0, ..TrainConfig::default() };
        let fit = fit_binary(&rows, &t, 3, 1e-2, &cfg);
        for w in fit.losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9);
        }
    }
}
