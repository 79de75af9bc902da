// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wse_core::linear_ref::Polyline;
use wse_core::pipeline::{
    assign_truth, evaluate_predictions, ground_truth_build, kfold_plan, water_edge_workflow, EvalOptions,
    Prediction, WaterEdgeOptions,
};
use wse_core::raster::{BoundingBox, GeoTransform, Grid};
use wse_core::regress::{LinearFit, Predict};

#[test]
fn ground_truth_standard_error_tracks_noise() {
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let pts: Vec<(f64, f64)> = (0..60)
            .map(|_| {
                let c: f64 = rng.gen_range(0.0..2000.0);
                let u = c / 1000.0 - 1.0;
                (c, 180.0 - 0.8 * u + 0.05 * u * u - 0.02 * u.powi(3) + noise.sample(&mut rng))
            })
            .collect();
        let (_, s_e) = ground_truth_build(&pts, 3, &[]).unwrap();
        assert!((0.005..=0.02).contains(&s_e), "S_e {s_e}");
    }
}

struct Quadratic;

impl Predict for Quadratic {
    fn predict(&self, c: f64) -> f64 {
        200.0 - 1e-3 * c + 2e-6 * c * c
    }
}

#[test]
fn assign_truth_matches_dense_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut checked = 0;
    while checked < 100 {
        let start = (rng.gen_range(-50.0..0.0), rng.gen_range(-5.0..5.0));
        let bend = (rng.gen_range(10.0..40.0), rng.gen_range(-5.0..5.0));
        let end = (bend.0 + rng.gen_range(-5.0..5.0), bend.1 + rng.gen_range(20.0..50.0));
        let line = Polyline::new(vec![start, bend, end]).unwrap();
        let sq = BoundingBox::square(rng.gen_range(0.0..30.0), rng.gen_range(-5.0..20.0), 10.0).unwrap();
        let inside: Vec<f64> = line
            .densify(1e-3)
            .unwrap()
            .into_iter()
            .filter(|p| sq.contains(p.x, p.y))
            .map(|p| p.chainage)
            .collect();
        if inside.len() < 2 {
            continue;
        }
        // skip lines that leave and re-enter the square
        if inside.windows(2).any(|w| w[1] - w[0] > 0.01) {
            continue;
        }
        let dense = inside.iter().map(|&c| Quadratic.predict(c)).sum::<f64>() / inside.len() as f64;
        let got = assign_truth(&Quadratic, &line, &sq).unwrap();
        assert!((got - dense).abs() <= 1e-4, "{got} vs {dense}");
        checked += 1;
    }
}

/// 0.1 m DSM along the x axis; the edge line runs through the middle row.
fn edge_grid(values_at: impl Fn(usize) -> f64, cols: usize) -> Grid {
    let t = GeoTransform::new(-0.05, 0.15, 0.1).unwrap();
    let row: Vec<f64> = (0..cols).map(values_at).collect();
    let values = [row.clone(), row.clone(), row].concat();
    Grid::new(cols, 3, values, Some(-9999.0), t).unwrap()
}

#[test]
fn water_edge_removes_vegetation_spikes() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let cols = 3001;
    let spikes: BTreeSet<usize> = (0..cols).filter(|_| rng.gen_bool(0.1)).collect();
    let n: Vec<f64> = (0..cols).map(|_| noise.sample(&mut rng)).collect();
    let grid = edge_grid(
        |i| 150.0 + 0.001 * i as f64 * 0.1 + n[i] + if spikes.contains(&i) { 1.0 } else { 0.0 },
        cols,
    );
    let edge = Polyline::new(vec![(0.0, 0.0), (300.0, 0.0)]).unwrap();
    let r = water_edge_workflow(&grid, &edge, &WaterEdgeOptions::default()).unwrap();
    assert_eq!(r.raw.len(), cols);
    let removed: BTreeSet<usize> = r.removed.chainage().iter().map(|c| (c / 0.1).round() as usize).collect();
    assert!(spikes.is_subset(&removed));
    assert!((r.fit.slope - 0.001).abs() <= 0.05 * 0.001, "slope {}", r.fit.slope);
    assert!((r.fit.intercept - 150.0).abs() <= 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kfold_invariants(ids in prop::collection::btree_set("[A-Z]{2,4}[0-9]{0,2}", 2..12)) {
        let ids: Vec<String> = ids.into_iter().collect();
        let plan = kfold_plan(&ids).unwrap();
        prop_assert_eq!(plan.folds.len(), ids.len());
        let all: BTreeSet<&String> = ids.iter().collect();
        let vals: BTreeSet<&String> = plan.folds.iter().map(|f| &f.validation_subset).collect();
        prop_assert_eq!(&vals, &all);
        for f in &plan.folds {
            prop_assert!(!f.training_subsets.contains(&f.validation_subset));
            let mut union: BTreeSet<&String> = f.training_subsets.iter().collect();
            prop_assert_eq!(union.len(), ids.len() - 1);
            union.insert(&f.validation_subset);
            prop_assert_eq!(&union, &all);
        }
    }

    #[test]
    fn evaluation_ignores_row_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut preds: Vec<Prediction> = Vec::new();
        for subset in ["A", "B"] {
            for i in 0..40 {
                let c = i as f64 * 25.0 + rng.gen_range(0.0..5.0);
                preds.push(Prediction {
                    subset_id: subset.into(),
                    sample_id: format!("{subset}_{i:04}"),
                    chainage: c,
                    wse_pred: 100.0 - 0.001 * c + rng.gen_range(-0.1..0.1),
                    uncertainty: None,
                });
            }
        }
        let truth: BTreeMap<String, LinearFit> = ["A", "B"]
            .iter()
            .map(|s| (s.to_string(), LinearFit { slope: -0.001, intercept: 100.0, n: 2 }))
            .collect();
        let opts = EvalOptions::default();
        let a = evaluate_predictions(&preds, &truth, &opts).unwrap();
        preds.shuffle(&mut rng);
        let b = evaluate_predictions(&preds, &truth, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
