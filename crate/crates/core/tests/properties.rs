use aimsynth::data::{AttrSet, Dataset, Domain, Workload};
use aimsynth::pgm::{estimate, EstimateConfig, Measurement, StructuralZeros};
use aimsynth::privacy::{dp_to_zcdp, exponential_probabilities, gaussian_mechanism, zcdp_to_dp};
use aimsynth::uncertainty::{supported_bound, Lambdas};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(1usize..=4, 2..=4).prop_flat_map(|sizes| {
        let d = sizes.len();
        let record = sizes.iter().map(|&n| 0..n as u32).collect::<Vec<_>>();
        prop::collection::vec(record, 1..60).prop_map(move |records| {
            let domain = Domain::with_sizes((0..d).map(|i| (format!("a{i}"), sizes[i]))).unwrap();
            Dataset::new(domain, records).unwrap()
        })
    })
}

fn subset(mask: u32, d: usize) -> AttrSet {
    AttrSet::new((0..d).filter(|i| mask & (1 << i) != 0))
}

fn workload(d: usize) -> impl Strategy<Value = Workload> {
    let max = 1u32 << d;
    prop::collection::btree_map(1..max, 0.1f64..5.0, 1..5)
        .prop_map(move |qs| Workload::new(qs.into_iter().map(|(m, c)| (subset(m, d), c)).collect()).unwrap())
}

proptest! {
    #[test]
    fn projection_agrees_with_direct_marginal(data in dataset(), big in 0u32..16, small in 0u32..16) {
        let d = data.domain().d();
        let s = subset(big & ((1 << d) - 1), d);
        let r = subset(small & big & ((1 << d) - 1), d);
        let direct = data.marginal(&r).unwrap();
        let projected = data.marginal(&s).unwrap().project(data.domain(), &r);
        prop_assert_eq!(direct.counts(), projected.counts());
        prop_assert_eq!(projected.total(), data.len() as f64);
    }

    #[test]
    fn closure_is_idempotent_and_monotone(w in workload(4), extra in workload(4)) {
        let closure = w.downward_closure();
        let again = Workload::new(closure.iter().map(|r| (r.clone(), 1.0)).collect()).unwrap().downward_closure();
        prop_assert_eq!(&closure, &again);
        for (r, _) in w.queries() {
            for s in r.nonempty_subsets() {
                prop_assert!(closure.contains(&s));
            }
        }
        let mut both: Vec<(AttrSet, f64)> = w.queries().to_vec();
        both.extend(extra.queries().iter().filter(|(r, _)| w.queries().iter().all(|(q, _)| q != r)).cloned());
        let bigger = Workload::new(both).unwrap().downward_closure();
        prop_assert!(closure.iter().all(|r| bigger.contains(r)));
    }

    #[test]
    fn weights_are_linear_in_query_weights(w in workload(4), factor in 0.1f64..10.0) {
        let scaled = w.scaled(factor).unwrap();
        for r in w.downward_closure() {
            let expected: f64 = w.queries().iter().map(|(s, c)| c * r.intersection_len(s) as f64).sum();
            prop_assert!((w.weight(&r) - expected).abs() < 1e-9);
            prop_assert!((scaled.weight(&r) - factor * w.weight(&r)).abs() < 1e-9 * (1.0 + w.weight(&r)));
        }
    }

    #[test]
    fn conversion_round_trips(rho in 1e-3f64..10.0, log_delta in -12.0f64..-3.0) {
        let delta = 10f64.powf(log_delta);
        let eps = zcdp_to_dp(rho, delta).unwrap();
        let back = dp_to_zcdp(eps, delta).unwrap().value();
        prop_assert!((back - rho).abs() <= 1e-6 * rho.max(1.0));
        prop_assert!(zcdp_to_dp(rho * 1.01, delta).unwrap() > eps);
    }

    #[test]
    fn exponential_mechanism_ignores_joint_rescaling(
        scores in prop::collection::vec(-50.0f64..50.0, 1..12),
        eps in 0.01f64..5.0,
        sens in 0.1f64..10.0,
        c in 0.1f64..10.0,
    ) {
        let p = exponential_probabilities(&scores, eps, sens).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|s| s * c).collect();
        let q = exponential_probabilities(&scaled, eps, sens * c).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn estimation_objective_never_increases(data in dataset(), masks in prop::collection::vec(1u32..16, 1..4), seed in 0u64..1000) {
        let d = data.domain().d();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ms: Vec<Measurement> = masks
            .iter()
            .map(|&m| {
                let r = subset(m & ((1 << d) - 1), d);
                let r = if r.is_empty() { AttrSet::single(0) } else { r };
                Measurement::new(gaussian_mechanism(&data.marginal(&r).unwrap(), 2.0, &mut rng).unwrap(), 2.0)
            })
            .collect();
        let cfg = EstimateConfig { max_iters: 200, ..Default::default() };
        let model = estimate(&ms, data.domain(), &StructuralZeros::none(), &cfg, None).unwrap();
        let obj = &model.stats().objective;
        prop_assert!(obj.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bounds_grow_with_lambda(sigma in 0.01f64..50.0, cells in 1usize..10_000, a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(supported_bound(sigma, cells, lo) <= supported_bound(sigma, cells, hi));
    }

    #[test]
    fn lambdas_grow_with_confidence(c1 in 0.5f64..0.999, c2 in 0.5f64..0.999) {
        prop_assume!((c1 - 0.95).abs() > 1e-12 && (c2 - 0.95).abs() > 1e-12);
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let (a, b) = (Lambdas::for_confidence(lo).unwrap(), Lambdas::for_confidence(hi).unwrap());
        prop_assert!(a.lambda <= b.lambda && a.lambda1 <= b.lambda1 && a.lambda2 <= b.lambda2);
        prop_assert!((b.supported_level() - hi).abs() < 1e-9);
    }
}
