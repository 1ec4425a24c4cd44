use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower_debias::{classify, Column, Dataset, DebiasConfig, DebiasIndex, Role, Standardizer};

fn reference(features: &[Vec<f64>], s: Vec<f64>) -> Dataset {
    let n = s.len();
    let mut cols = vec![Column::numeric("y", Role::Target, vec![0.0; n])];
    for (j, f) in features.iter().enumerate() {
        cols.push(Column::numeric(format!("x{j}"), Role::Feature, f.clone()));
    }
    cols.push(Column::numeric("s", Role::Sensitive, s));
    Dataset::from_columns(cols).unwrap()
}

fn random_reference(n: usize, p: usize, rng: &mut ChaCha8Rng) -> (Dataset, Vec<f64>) {
    let features: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let s = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    let preds = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
    (reference(&features, s), preds)
}

#[test]
fn neighbor_sets_match_all_pairs_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (d, preds) = random_reference(200, 3, &mut rng);
    let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
    let points = index.standardize(&d).unwrap();
    for q in points.chunks(3) {
        let mut scan: Vec<(f64, usize)> = points
            .chunks(3)
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        scan.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for k in [1, 5, 17, 200] {
            let got: Vec<usize> = index.neighbors(q, k).iter().map(|h| h.index).collect();
            let want: Vec<usize> = scan[..k].iter().map(|&(_, i)| i).collect();
            assert_eq!(got, want);
        }
    }
}

#[test]
fn identical_features_average_lowest_indices() {
    let n = 12;
    let d = reference(&[vec![2.0; n], (0..n).map(|i| f64::from(i as u8 % 2)).collect()], vec![0.0; n]);
    let st = Standardizer {
        names: vec!["x0".into(), "x1".into()],
        means: vec![0.0, 0.0],
        sds: vec![1.0, 1.0],
    };
    let preds: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let index = DebiasIndex::build(&d, &preds, st).unwrap();
    // query at x1 = 0 ties on every even row
    let hits: Vec<usize> = index.neighbors(&[2.0, 0.0], 3).iter().map(|h| h.index).collect();
    assert_eq!(hits, vec![0, 2, 4]);
    let out = index.debias_points(&[2.0, 0.0], &DebiasConfig::new(3)).unwrap();
    assert_eq!(out, vec![2.0]);
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn smoothing_variance_shrinks_with_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 400;
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let s: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    let preds: Vec<f64> = x.iter().zip(&s).map(|(a, b)| a + 2.0 * b + rng.random_range(-1.0..1.0)).collect();
    let d = reference(&[x], s);
    let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
    let vars: Vec<f64> = [1, n / 4, n / 2, n]
        .iter()
        .map(|&k| variance(&index.debias_predict(&d, &DebiasConfig::new(k)).unwrap()))
        .collect();
    assert!(vars.windows(2).all(|w| w[1] <= w[0]), "{vars:?}");
    assert!(vars[3] < 1e-20);
}

#[test]
fn reference_permutation_changes_nothing_without_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (d, preds) = random_reference(150, 2, &mut rng);
    let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
    let base = index.debias_predict(&d, &DebiasConfig::new(9)).unwrap();

    let mut perm: Vec<usize> = (0..150).collect();
    perm.shuffle(&mut rng);
    let shuffled = d.select_rows(&perm);
    let shuffled_preds: Vec<f64> = perm.iter().map(|&i| preds[i]).collect();
    let index2 = DebiasIndex::build(&shuffled, &shuffled_preds, index.standardizer().clone()).unwrap();
    let again = index2.debias_predict(&d, &DebiasConfig::new(9)).unwrap();
    for (a, b) in base.iter().zip(&again) {
        // same neighbor set, possibly summed in another order
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn classification_labels_follow_the_larger_class_probability() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let probs: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
    let labels = classify(&probs, 0.5).unwrap();
    for (p, l) in probs.iter().zip(&labels) {
        let argmax = if *p >= 1.0 - p { 1 } else { 0 };
        assert_eq!(*l, argmax);
    }
}

#[test]
fn sensitive_columns_never_enter_the_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d, preds) = random_reference(30, 2, &mut rng);
    let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
    assert_eq!(index.metadata().feature_names, vec!["x0", "x1"]);
    assert_eq!(index.reference_row_ids(), d.row_ids());
}

proptest! {
    #[test]
    fn outputs_stay_within_prediction_range(
        seed in any::<u64>(),
        n in 2usize..120,
        k in 1usize..150,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<Vec<f64>> = (0..2)
            .map(|_| {
                let mut c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                c[0] = -2.0;
                c[n - 1] = 2.0;
                c
            })
            .collect();
        let s = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let preds: Vec<f64> = (0..n).map(|_| rng.random_range(-1e6..1e6)).collect();
        let d = reference(&features, s);
        let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
        let out = index.debias_predict(&d, &DebiasConfig::new(k)).unwrap();
        let lo = preds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = preds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(out.len(), n);
        prop_assert!(out.iter().all(|&v| v >= lo && v <= hi));
    }

    #[test]
    fn neighbor_count_is_min_of_k_and_n(n in 1usize..60, k in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 101 + k as u64);
        let (d, preds) = random_reference(n.max(2), 1, &mut rng);
        let index = DebiasIndex::build_with_fitted_standardizer(&d, &preds).unwrap();
        prop_assert_eq!(index.neighbors(&[0.0], k).len(), k.min(d.n_rows()));
    }
}
