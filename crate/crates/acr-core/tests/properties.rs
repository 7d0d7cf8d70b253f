//! Property tests for the kernel and metric invariants.

use acr_core::metrics::{aurc, auroc, degradation_rate, fpr_at_95_tpr, risk_coverage};
use acr_core::numerics::{cross_entropy_soft, logsumexp, softmax};
use acr_core::scores::{
    score_doctor, score_entropy, score_gen, score_msp, DoctorVariant, ScorerKind, ScorerSpec,
};
use proptest::prelude::*;

fn finite_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, len)
}

/// Random point on the probability simplex, bounded away from zero.
fn simplex(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..1.0, len).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        for x in &mut v {
            *x /= sum;
        }
        v
    })
}

proptest! {
    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(v in finite_vec(1..12), c in -30.0f64..30.0) {
        let p = softmax(&v).unwrap();
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let q = softmax(&shifted).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn logsumexp_shift_identity(v in finite_vec(1..12), c in -30.0f64..30.0) {
        let base = logsumexp(&v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((logsumexp(&shifted).unwrap() - (base + c)).abs() < 1e-12);
    }

    #[test]
    fn gibbs_inequality(p in simplex(2..8), t in simplex(2..8)) {
        // Compare at a common length.
        let len = p.len().min(t.len());
        let renorm = |v: &[f64]| {
            let s: f64 = v[..len].iter().sum();
            v[..len].iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let p = renorm(&p);
        let t = renorm(&t);
        let ce = cross_entropy_soft(&p, &t).unwrap();
        let entropy = cross_entropy_soft(&t, &t).unwrap();
        prop_assert!(ce >= entropy - 1e-9, "ce {ce} < entropy {entropy}");
        // Equality holds at p = t.
        let self_ce = cross_entropy_soft(&t, &t).unwrap();
        prop_assert!((self_ce - entropy).abs() < 1e-12);
    }

    #[test]
    fn ranking_metrics_invariant_under_monotone_transforms(
        scores in prop::collection::vec(-10.0f64..10.0, 4..40),
        flips in prop::collection::vec(any::<bool>(), 4..40),
    ) {
        let n = scores.len().min(flips.len());
        let scores = &scores[..n];
        let correct = &flips[..n];
        let pos = correct.iter().filter(|&&c| c).count();
        prop_assume!(pos > 0 && pos < n);
        // Strictly increasing transforms preserve ranks and ties exactly.
        let affine: Vec<f64> = scores.iter().map(|s| 2.5 * s + 1.0).collect();
        let cubic: Vec<f64> = scores.iter().map(|s| s.powi(3)).collect();
        for transformed in [affine, cubic] {
            prop_assert_eq!(
                auroc(scores, correct).unwrap(),
                auroc(&transformed, correct).unwrap()
            );
            prop_assert_eq!(
                fpr_at_95_tpr(scores, correct).unwrap(),
                fpr_at_95_tpr(&transformed, correct).unwrap()
            );
            prop_assert_eq!(
                aurc(scores, correct).unwrap(),
                aurc(&transformed, correct).unwrap()
            );
        }
    }

    #[test]
    fn risk_curve_shape(scores in prop::collection::vec(-5.0f64..5.0, 1..50),
                        flips in prop::collection::vec(any::<bool>(), 1..50)) {
        let n = scores.len().min(flips.len());
        let curve = risk_coverage(&scores[..n], &flips[..n]).unwrap();
        prop_assert_eq!(curve.coverage.len(), n);
        prop_assert!(curve.coverage.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((curve.coverage[n - 1] - 1.0).abs() < 1e-15);
        prop_assert!(curve.risk.iter().all(|&r| (0.0..=1.0).contains(&r)));
        let errors = flips[..n].iter().filter(|&&c| !c).count() as f64;
        prop_assert!((curve.risk[n - 1] - errors / n as f64).abs() < 1e-12);
    }

    #[test]
    fn degradation_is_modality_permutation_invariant(
        fused in prop::collection::vec(0.0f64..1.0, 5..20),
        uni_a in prop::collection::vec(0.0f64..1.0, 5..20),
        uni_b in prop::collection::vec(0.0f64..1.0, 5..20),
        flips in prop::collection::vec(any::<bool>(), 5..20),
    ) {
        let n = fused.len().min(uni_a.len()).min(uni_b.len()).min(flips.len());
        let f = &fused[..n];
        let a = &uni_a[..n];
        let b = &uni_b[..n];
        let c = &flips[..n];
        let forward = degradation_rate(f, &[a, b], c).unwrap();
        let swapped = degradation_rate(f, &[b, a], c).unwrap();
        prop_assert_eq!(forward, swapped);
    }

    #[test]
    fn one_hot_attains_the_maximal_score(p in simplex(2..8), hot in 0usize..8) {
        let c = p.len();
        let mut one_hot = vec![0.0; c];
        one_hot[hot % c] = 1.0;
        prop_assert!(score_msp(&p).unwrap() <= score_msp(&one_hot).unwrap());
        prop_assert!(score_entropy(&p).unwrap() <= score_entropy(&one_hot).unwrap() + 1e-12);
        for variant in [DoctorVariant::Alpha, DoctorVariant::Beta] {
            prop_assert!(
                score_doctor(&p, variant).unwrap()
                    <= score_doctor(&one_hot, variant).unwrap() + 1e-12
            );
        }
        let gamma = 0.1;
        prop_assert!(
            score_gen(&p, gamma, c).unwrap() <= score_gen(&one_hot, gamma, c).unwrap() + 1e-12
        );
    }

    #[test]
    fn probability_scorers_are_order_pure(p in simplex(3..7)) {
        // Scoring twice gives the same value; scoring never mutates input.
        for kind in [ScorerKind::Msp, ScorerKind::Entropy, ScorerKind::DoctorAlpha,
                     ScorerKind::DoctorBeta, ScorerKind::Gen] {
            let spec = ScorerSpec::new(kind);
            let a = acr_core::scores::score_probs(&spec, &p).unwrap();
            let b = acr_core::scores::score_probs(&spec, &p).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.is_finite());
        }
    }
}

/// AUROC against the O(n²) pair-counting oracle on randomized cases.
#[test]
fn auroc_equals_pair_counting_exactly() {
    use acr_core::numerics::RandomStream;
    let mut rng = RandomStream::new(99);
    for trial in 0..300 {
        let n = rng.uniform_usize(2, 60).unwrap();
        // Coarse score grid to force plenty of ties.
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.uniform_usize(0, 9).unwrap() as f64 / 10.0)
            .collect();
        let mut correct: Vec<bool> = (0..n).map(|_| rng.next_u64() % 2 == 0).collect();
        if correct.iter().all(|&c| c) {
            correct[0] = false;
        }
        if correct.iter().all(|&c| !c) {
            correct[0] = true;
        }
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for i in 0..n {
            if !correct[i] {
                continue;
            }
            for j in 0..n {
                if correct[j] {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        let oracle = wins / pairs;
        let got = auroc(&scores, &correct).unwrap();
        assert_eq!(got, oracle, "trial {trial}: auroc {got} != oracle {oracle}");
    }
}
