// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wse_core::metrics::{rmse, uce, EvalPair};

fn random_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<EvalPair> {
    (0..n)
        .map(|i| {
            let truth = rng.gen_range(100.0..300.0);
            EvalPair::new(
                i as f64,
                truth,
                truth + rng.gen_range(-0.3..0.3),
                Some(rng.gen_range(0.0..0.2)),
            )
            .unwrap()
        })
        .collect()
}

/// Explicit partition into bins, then the weighted sum.
fn brute_force_uce(pairs: &[EvalPair], n_bins: usize) -> f64 {
    let s: Vec<f64> = pairs.iter().map(|p| p.uncertainty.unwrap()).collect();
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for b in 0..n_bins {
        let left = lo + (hi - lo) * b as f64 / n_bins as f64;
        let right = lo + (hi - lo) * (b + 1) as f64 / n_bins as f64;
        let members: Vec<&EvalPair> = pairs
            .iter()
            .filter(|p| {
                let u = p.uncertainty.unwrap();
                let idx = if hi > lo {
                    (((u - lo) / ((hi - lo) / n_bins as f64)) as usize).min(n_bins - 1)
                } else {
                    0
                };
                // cross-check the index against the explicit edges
                debug_assert!(idx != b || (u >= left - 1e-12 && u <= right + 1e-12));
                idx == b
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let m = members.len() as f64;
        let mse = members.iter().map(|p| (p.truth - p.pred).powi(2)).sum::<f64>() / m;
        let var = members.iter().map(|p| p.uncertainty.unwrap().powi(2)).sum::<f64>() / m;
        total += m / pairs.len() as f64 * (mse - var).abs();
    }
    total
}

#[test]
fn rmse_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let pairs = random_pairs(&mut rng, 100);
    let mut acc = 0.0;
    for p in &pairs {
        acc += (p.truth - p.pred) * (p.truth - p.pred);
    }
    let direct = (acc / 100.0).sqrt();
    let got = rmse(&pairs).unwrap();
    assert!((got - direct).abs() <= 1e-12 * direct);
}

#[test]
fn uce_matches_brute_force_binning() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..200 {
        let n = rng.gen_range(1..150);
        let pairs = random_pairs(&mut rng, n);
        let bins = rng.gen_range(1..15);
        assert!((uce(&pairs, bins).unwrap() - brute_force_uce(&pairs, bins)).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn rmse_permutation_and_mean_bound(seed in any::<u64>(), n in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = random_pairs(&mut rng, n);
        let a = rmse(&pairs).unwrap();
        pairs.reverse();
        prop_assert!((rmse(&pairs).unwrap() - a).abs() <= 1e-12 * a.max(1e-300));
        let mean_err = pairs.iter().map(|p| p.truth - p.pred).sum::<f64>() / n as f64;
        prop_assert!(a + 1e-12 >= mean_err.abs());
    }

    #[test]
    fn scaling_laws(seed in any::<u64>(), k in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = random_pairs(&mut rng, 40);
        let scaled: Vec<EvalPair> = pairs
            .iter()
            .map(|p| EvalPair::new(p.chainage, 0.0, k * (p.pred - p.truth), p.uncertainty.map(|u| k * u)).unwrap())
            .collect();
        let (r, r2) = (rmse(&pairs).unwrap(), rmse(&scaled).unwrap());
        prop_assert!((r2 - k * r).abs() <= 1e-9 * k * r);
        let (u, u2) = (uce(&pairs, 10).unwrap(), uce(&scaled, 10).unwrap());
        prop_assert!(u >= 0.0);
        prop_assert!((u2 - k * k * u).abs() <= 1e-9 * (k * k * u).max(1e-12));
    }
}
