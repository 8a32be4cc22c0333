use std::sync::Arc;

use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use private_online::adaptive::{AdaptiveWrapper, ReplicaMode};
use private_online::boosting::{build_potential_table, majority};
use private_online::domain::{empirical_risk, Example, FiniteDistribution, LabeledSample, Round, Transcript};
use private_online::harness::{make_adaptive_binary_search, run_game, Adversary, AdversaryKind, AdversarySpec};
use private_online::hypothesis::{ClassKind, HypothesisClass};
use private_online::mw::{mw_distribution, mw_update, MwState};
use private_online::online::{CoinFlipLearner, OnlineLearner};
use private_online::pool::{sample_pool, DummySample};
use private_online::privacy::{
    audit_privacy, exponential_mechanism_distribution, ExponentialMechanism, LearnerOracle,
};
use private_online::rng::{child_rng, rng_from_seed};
use private_online::weak::WeakLearnerConfig;

fn class_strategy() -> impl Strategy<Value = HypothesisClass> {
    (prop_oneof![Just(ClassKind::Thresholds), Just(ClassKind::Points), Just(ClassKind::Intervals)], 1usize..7)
        .prop_map(|(k, d)| HypothesisClass::new(k, d).unwrap())
}

fn sample_strategy(d: usize, m: usize) -> impl Strategy<Value = Vec<(usize, u8)>> {
    prop::collection::vec((0..d, 0u8..2), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mechanism_is_a_distribution_and_private(
        class in class_strategy(),
        m in 1usize..6,
        eps in 0.01f64..2.0,
        seed in any::<u64>(),
    ) {
        let d = class.domain_size();
        let mut rng = rng_from_seed(seed);
        let mut draw = || -> LabeledSample {
            (0..m).map(|_| {
                let x = rand::Rng::random_range(&mut rng, 0..d);
                let y = rand::Rng::random_range(&mut rng, 0..2u8);
                Example::new(x, y).unwrap()
            }).collect()
        };
        let (s, t) = (draw(), draw());
        let p = exponential_mechanism_distribution(&class, &s, eps).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0));
        let r = audit_privacy(&class, &s, &t, eps).unwrap();
        prop_assert!(r.pass, "q = {}, ratio {} > {}", r.q, r.max_log_ratio, r.bound);
    }

    #[test]
    fn empirical_risk_equals_population_risk_of_empirical(
        class in class_strategy(),
        raw in sample_strategy(6, 12),
    ) {
        let d = class.domain_size();
        let s: LabeledSample = raw.iter().map(|&(x, y)| Example::new(x % d, y).unwrap()).collect();
        let dist = FiniteDistribution::empirical(&s).unwrap();
        for h in class.hypotheses() {
            let a = empirical_risk(&class, h, &s).unwrap();
            prop_assert!((a - dist.risk(&class, h)).abs() < 1e-12);
        }
    }

    #[test]
    fn mw_is_scale_free(
        losses in prop::collection::vec(prop::collection::vec(0u8..2, 4), 1..20),
        scale in 1e-100f64..1e100,
    ) {
        let mut a = MwState::with_eta(vec![1.0; 4], 0.3, losses.len());
        let mut b = MwState::with_eta(vec![scale; 4], 0.3, losses.len());
        for row in &losses {
            mw_update(&mut a, row).unwrap();
            mw_update(&mut b, row).unwrap();
            let (pa, pb) = (mw_distribution(&a), mw_distribution(&b));
            for (x, y) in pa.iter().zip(&pb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mw_survives_long_losing_streaks(n in 2usize..6, rounds in 1000usize..5000) {
        let mut s = MwState::with_eta(vec![1.0; n], 5.0, rounds);
        let mut row = vec![1u8; n];
        row[0] = 0;
        for _ in 0..rounds {
            mw_update(&mut s, &row).unwrap();
            prop_assert!(s.weights().iter().all(|w| w.is_finite()));
        }
        let p = mw_distribution(&s);
        prop_assert!((p[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potential_table_invariants(n in 1usize..80, gamma in 0.001f64..0.499) {
        let t = build_potential_table(n, gamma).unwrap();
        let span = n as i64;
        for k in 0..=n {
            for s in -span - 1..=span {
                prop_assert!(t.phi(k, s + 1) <= t.phi(k, s) + 1e-15);
            }
        }
        for i in 1..=n {
            let mut hit_one = false;
            for s in -span..=span {
                prop_assert!(t.weight(i, s) >= -1e-15);
                let p = t.pass_probability(i, s);
                prop_assert!((0.0..=1.0).contains(&p));
                hit_one |= (p - 1.0).abs() < 1e-12;
            }
            prop_assert!(hit_one, "pass probabilities of learner {} never reach 1", i);
        }
    }

    #[test]
    fn majority_matches_count(votes in prop::collection::vec(0u8..2, 1..50)) {
        let ones = votes.iter().filter(|&&v| v == 1).count();
        let expected = if 2 * ones >= votes.len() { 1 } else { 0 };
        prop_assert_eq!(majority(&votes), expected);
    }

    #[test]
    fn transcript_csv_roundtrip(
        rows in prop::collection::vec((0usize..100, 0u8..2, 0u8..2), 0..60),
        seed in any::<u64>(),
    ) {
        let mut t = Transcript::new(rows.len(), seed);
        for &(x, y, yhat) in &rows {
            t.push(Round::new(x, y, yhat)).unwrap();
        }
        let text = t.to_csv_string().unwrap();
        let back = Transcript::read_csv(text.as_bytes(), rows.len(), seed).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn shipped_adversaries_stay_realizable(
        kind in prop_oneof![
            Just(AdversaryKind::Iid),
            Just(AdversaryKind::Fixed),
            Just(AdversaryKind::Tracker),
            Just(AdversaryKind::Bisect),
            Just(AdversaryKind::Lazy),
        ],
        d in 1usize..10,
        horizon in 1usize..80,
        seed in any::<u64>(),
    ) {
        let class = Arc::new(HypothesisClass::thresholds(d).unwrap());
        let mut adv = AdversarySpec::new(kind).build(&class, horizon, &mut child_rng(seed, 0)).unwrap();
        let t = run_game(&mut CoinFlipLearner, &mut *adv, &class, horizon, seed).unwrap();
        prop_assert!(t.realizing_hypotheses(&class).next().is_some());
        if let Some(c) = adv.target() {
            prop_assert!(t.rounds.iter().all(|r| class.eval(c, r.x) == r.y));
        }
    }

    #[test]
    fn bisection_keeps_target_feasible(d in 1usize..40, target in 0usize..41, seed in any::<u64>()) {
        let class = Arc::new(HypothesisClass::thresholds(d).unwrap());
        let c = target % class.size();
        let mut adv = make_adaptive_binary_search(class.clone(), c).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..20 {
            let (lo, hi) = adv.feasible();
            prop_assert!(lo <= c && c <= hi);
            let x = adv.next_instance().unwrap();
            let y = adv.label(x).unwrap();
            adv.observe(x, y, rand::Rng::random_range(&mut rng, 0..2u8));
        }
    }

    #[test]
    fn replay_and_live_wrappers_agree(seed in any::<u64>(), xs in prop::collection::vec(0usize..6, 1..25)) {
        let oracle: Arc<dyn LearnerOracle> =
            Arc::new(ExponentialMechanism::with_default_epsilon(HypothesisClass::thresholds(6).unwrap()));
        let factory = WeakLearnerConfig::faithful(oracle, 4, xs.len()).unwrap().factory();
        let mut a = AdaptiveWrapper::new(factory.clone(), xs.len(), seed, ReplicaMode::Replay).unwrap();
        let mut b = AdaptiveWrapper::new(factory, xs.len(), seed, ReplicaMode::Live).unwrap();
        let mut rng = rng_from_seed(0);
        for (t, &x) in xs.iter().enumerate() {
            let y = (x >= 3) as u8;
            prop_assert_eq!(a.predict(x, &mut rng).unwrap(), b.predict(x, &mut rng).unwrap());
            // skip some updates, as the booster does
            if t % 3 != 1 {
                a.update(x, y, &mut rng).unwrap();
                b.update(x, y, &mut rng).unwrap();
            }
        }
    }
}

#[test]
fn pool_draws_are_iid_from_the_dummy_distribution() {
    let class = HypothesisClass::thresholds(5).unwrap();
    let oracle = ExponentialMechanism::with_default_epsilon(class.clone());
    let m0 = 6;
    let p = exponential_mechanism_distribution(&class, &DummySample::new(m0).to_sample(), 0.1).unwrap();
    let n = 20_000;
    let pool = sample_pool(&oracle, m0, n, 17).unwrap();

    // frequencies
    let mut counts = vec![0usize; class.size()];
    for &h in &pool.experts {
        counts[h] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&p)
        .map(|(&c, &q)| (c as f64 - n as f64 * q).powi(2) / (n as f64 * q))
        .sum();
    let df = (class.size() - 1) as f64;
    let pvalue = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    assert!(pvalue > 1e-3, "chi-square {stat} on {df} df, p = {pvalue}");

    // independence of consecutive draws: pair table against the product law
    let k = class.size();
    let mut pairs = vec![0usize; k * k];
    for w in pool.experts.chunks_exact(2) {
        pairs[w[0] * k + w[1]] += 1;
    }
    let npairs = (n / 2) as f64;
    let stat: f64 = (0..k * k)
        .map(|ij| {
            let e = npairs * p[ij / k] * p[ij % k];
            (pairs[ij] as f64 - e).powi(2) / e
        })
        .sum();
    let df = (k * k - 1) as f64;
    let pvalue = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    assert!(pvalue > 1e-3, "pair chi-square {stat} on {df} df, p = {pvalue}");
}

#[test]
fn iid_adversary_frequencies() {
    let class = Arc::new(HypothesisClass::thresholds(4).unwrap());
    let spec = AdversarySpec {
        marginal: Some((0..4).map(|x| (x, 0.25)).collect()),
        ..AdversarySpec::new(AdversaryKind::Iid).with_target(2)
    };
    let horizon = 10_000;
    let mut adv = spec.build(&class, horizon, &mut rng_from_seed(3)).unwrap();
    let mut counts = [0usize; 4];
    for _ in 0..horizon {
        let x = adv.next_instance().unwrap();
        let y = adv.label(x).unwrap();
        assert_eq!(y, class.eval(2, x));
        adv.observe(x, y, 0);
        counts[x] += 1;
    }
    let sigma = (0.25 * 0.75 / horizon as f64).sqrt();
    for c in counts {
        assert!((c as f64 / horizon as f64 - 0.25).abs() <= 3.0 * sigma);
    }
}

#[test]
fn weak_learner_beats_its_bound_on_a_fixed_sequence() {
    let class = HypothesisClass::thresholds(8).unwrap();
    let oracle: Arc<dyn LearnerOracle> = Arc::new(ExponentialMechanism::with_default_epsilon(class.clone()));
    let cfg = WeakLearnerConfig::faithful(oracle, 19, 1000).unwrap();
    let bound = cfg.guarantee().mistake_bound(1000);
    let xs: Vec<usize> = (0..1000).map(|t| (t * 5) % 8).collect();
    let mut total = 0.0;
    for seed in 0..20 {
        let mut adv = private_online::harness::FixedSequence::from_instances(&class, 4, &xs).unwrap();
        let mut learner = cfg.build(seed).unwrap();
        total += run_game(&mut learner, &mut adv, &class, 1000, seed).unwrap().mistakes() as f64;
    }
    assert!(total / 20.0 <= bound, "{} > {bound}", total / 20.0);
}
