mod common;

use common::*;
use namefair_core::losses::{clucl_penalty, cocl_penalty, penalty_gradient};
use namefair_core::{PenaltyInputs, Variant};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn clucl(p: &[f64], y: &[usize], cl: &[usize], k: usize, classes: usize) -> f64 {
    let inputs = PenaltyInputs::new(p.to_vec(), y.to_vec()).with_clusters(cl.to_vec());
    clucl_penalty(&inputs, k, classes).unwrap()
}

fn cocl(p: &[f64], y: &[usize], names: &[Vec<f64>], classes: usize) -> f64 {
    let refs = names.iter().map(Vec::as_slice).collect();
    let inputs = PenaltyInputs::new(p.to_vec(), y.to_vec()).with_name_vectors(refs);
    cocl_penalty(&inputs, classes).unwrap()
}

prop_compose! {
    fn records(max_classes: usize, k: usize, dim: usize)
        (n in 2usize..40, classes in 1..=max_classes)
        (p in prop::collection::vec(0.01f64..1.0, n),
         y in prop::collection::vec(0..classes, n),
         cl in prop::collection::vec(0..k, n),
         names in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, dim), n),
         classes in Just(classes))
        -> (Vec<f64>, Vec<usize>, Vec<usize>, Vec<Vec<f64>>, usize)
    {
        (p, y, cl, names, classes)
    }
}

proptest! {
    #[test]
    fn penalties_are_nonnegative((p, y, cl, names, classes) in records(4, 4, 3)) {
        prop_assert!(clucl(&p, &y, &cl, 4, classes) >= 0.0);
        prop_assert!(cocl(&p, &y, &names, classes) >= 0.0);
    }

    #[test]
    fn clucl_ignores_cluster_labels((p, y, cl, _n, classes) in records(4, 4, 1), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let relabelled: Vec<usize> = cl.iter().map(|&u| perm[u]).collect();
        let a = clucl(&p, &y, &cl, 4, classes);
        let b = clucl(&p, &y, &relabelled, 4, classes);
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn cocl_translation_per_class((p, y, _c, names, classes) in records(4, 1, 3),
                                  shifts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4)) {
        let moved: Vec<Vec<f64>> = names.iter().zip(&y)
            .map(|(v, &c)| v.iter().zip(&shifts[c]).map(|(a, s)| a + s).collect())
            .collect();
        let a = cocl(&p, &y, &names, classes);
        prop_assert!((a - cocl(&p, &y, &moved, classes)).abs() <= 1e-9);
    }

    #[test]
    fn cocl_scales_with_name_magnitude((p, y, _c, names, classes) in records(3, 1, 3), alpha in -4.0f64..4.0) {
        let scaled: Vec<Vec<f64>> = names.iter().map(|v| v.iter().map(|a| alpha * a).collect()).collect();
        let a = cocl(&p, &y, &names, classes);
        prop_assert!((cocl(&p, &y, &scaled, classes) - alpha.abs() * a).abs() <= 1e-9);
    }

    #[test]
    fn scaling_probabilities_about_class_means((p, y, cl, names, classes) in records(3, 3, 2), alpha in -3.0f64..3.0) {
        let mut scaled = p.clone();
        for c in 0..classes {
            let idx: Vec<usize> = (0..p.len()).filter(|&i| y[i] == c).collect();
            if idx.is_empty() {
                continue;
            }
            let mean = idx.iter().map(|&i| p[i]).sum::<f64>() / idx.len() as f64;
            for &i in &idx {
                scaled[i] = mean + alpha * (p[i] - mean);
            }
        }
        let (a, b) = (clucl(&p, &y, &cl, 3, classes), clucl(&scaled, &y, &cl, 3, classes));
        prop_assert!((b - alpha * alpha * a).abs() <= 1e-9);
        let (a, b) = (cocl(&p, &y, &names, classes), cocl(&scaled, &y, &names, classes));
        prop_assert!((b - alpha.abs() * a).abs() <= 1e-9);
    }

    #[test]
    fn masked_records_contribute_nothing((p, y, cl, names, classes) in records(3, 3, 2), keep in prop::collection::vec(any::<bool>(), 40)) {
        let n = p.len();
        let mask: Vec<bool> = keep[..n].to_vec();
        let refs: Vec<&[f64]> = names.iter().map(Vec::as_slice).collect();
        let full = PenaltyInputs::new(p.clone(), y.clone()).with_clusters(cl.clone()).with_name_vectors(refs).with_mask(mask.clone());
        let kept: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let pick = |v: &[f64]| kept.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let yk: Vec<usize> = kept.iter().map(|&i| y[i]).collect();
        let ck: Vec<usize> = kept.iter().map(|&i| cl[i]).collect();
        let nk: Vec<Vec<f64>> = kept.iter().map(|&i| names[i].clone()).collect();
        let pk = pick(&p);
        prop_assert!((clucl_penalty(&full, 3, classes).unwrap() - clucl_oracle(&pk, &yk, &ck, &vec![true; kept.len()], 3, classes)).abs() <= 1e-12);
        if !kept.is_empty() {
            prop_assert!((cocl_penalty(&full, classes).unwrap() - cocl_oracle(&pk, &yk, &nk, &vec![true; kept.len()], classes)).abs() <= 1e-12);
        }
        for variant in [Variant::Clucl, Variant::Cocl] {
            let g = penalty_gradient(&full, variant, 3, classes).unwrap();
            for i in 0..n {
                if !mask[i] {
                    prop_assert_eq!(g[i], 0.0);
                }
            }
        }
    }
}

#[test]
fn clucl_zero_exactly_when_cluster_means_agree() {
    let y = vec![0, 0, 0, 0, 1, 1];
    let cl = vec![0, 0, 1, 1, 0, 1];
    // class 0: cluster means 0.5 and 0.5; class 1: 0.3 and 0.3
    let p = vec![0.4, 0.6, 0.7, 0.3, 0.3, 0.3];
    assert_eq!(clucl(&p, &y, &cl, 2, 2), 0.0);
    let inputs = PenaltyInputs::new(p.clone(), y.clone()).with_clusters(cl.clone());
    assert!(penalty_gradient(&inputs, Variant::Clucl, 2, 2).unwrap().iter().all(|&g| g == 0.0));
    let mut q = p;
    q[5] = 0.31;
    assert!(clucl(&q, &y, &cl, 2, 2) > 0.0);
}

#[test]
fn shuffled_pairing_averages_towards_zero() {
    let mut r = rng(77);
    let mean_over = |n: usize, r: &mut rand_chacha::ChaCha8Rng| {
        let names: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        // p strongly tied to the name before shuffling
        let base: Vec<f64> = names.iter().map(|v| 0.1 + 0.8 * v[0]).collect();
        let y = vec![0; n];
        let original = cocl(&base, &y, &names, 1);
        let trials = 400;
        let mut total = 0.0;
        for _ in 0..trials {
            let mut p = base.clone();
            p.shuffle(r);
            total += cocl(&p, &y, &names, 1);
        }
        (original, total / trials as f64)
    };
    let (orig_small, null_small) = mean_over(50, &mut r);
    let (orig_large, null_large) = mean_over(800, &mut r);
    assert!(null_small < 0.2 * orig_small);
    assert!(null_large < 0.3 * null_small);
    assert!(null_large < 0.05 * orig_large);
}
