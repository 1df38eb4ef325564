use chainid_core::config::Constants;
use chainid_core::identity::{self, TestConfig};
use chainid_core::iid_test::{iid_sample_size, iid_test};
use chainid_core::metrics::{self, CutContext};
use chainid_core::partition::{partition_states, solve_spccc_lp, CutMetric};
use chainid_core::sampling::{self, IidOutcome, Trajectory};
use chainid_core::{chain, generate, subset, Decision, ProbVector, TransitionMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reversible(d: usize, seed: u64) -> TransitionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate::random_reversible(d, 0.5, 0.1, &mut rng)
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).prop_filter_map("positive mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| w.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn censored_chain_is_reversible_with_restricted_law(d in 2usize..=8, seed: u64, mask in 1u64..256) {
        let p = reversible(d, seed);
        let set = subset::from_mask(&subset::full(d), mask & ((1 << d) - 1));
        prop_assume!(!set.is_empty());
        let cen = chain::censor(&p, &set).unwrap();
        let pi_c = chain::stationary_distribution(&cen).unwrap();
        prop_assert!(chain::detailed_balance_residual(&cen, &pi_c) < 1e-8);
        let pi = chain::stationary_distribution(&p).unwrap();
        let want = pi.conditioned_on(&set).unwrap();
        for (a, &i) in set.iter().enumerate() {
            prop_assert!((pi_c.get(a) - want.get(i)).abs() < 1e-8);
        }
    }

    #[test]
    fn lazy_and_reversal_keep_the_stationary_law(d in 2usize..=8, seed: u64, alpha in 0.0..0.99f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = generate::random_irreducible(d, 0.5, 0.0, &mut rng);
        let pi = chain::stationary_distribution(&p).unwrap();
        let lazy = chain::lazy_version(&p, alpha).unwrap();
        prop_assert!(chain::stationary_distribution(&lazy).unwrap().max_abs_diff(&pi) < 1e-9);
        let back = chain::time_reversal(&chain::time_reversal(&p).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&p) < 1e-9);
        let dagger = chain::multiplicative_reversibilization(&p).unwrap();
        prop_assert!(chain::detailed_balance_residual(&dagger, &pi) < 1e-8);
        prop_assert!((chain::spectral_radius_nonneg(p.as_matrix()).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hellinger_sandwiches_total_variation((p, q) in (2usize..12).prop_flat_map(|n| (distribution(n), distribution(n)))) {
        let h2 = metrics::hellinger_sq(&p, &q).unwrap();
        let tv = metrics::total_variation(&p, &q).unwrap();
        prop_assert!(h2 <= tv + 1e-12);
        prop_assert!(tv <= (2.0 * h2).sqrt() + 1e-12);
    }

    #[test]
    fn chain_distance_is_symmetric_and_vanishes_on_the_diagonal(d in 2usize..=8, a: u64, b: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(a);
        let p = generate::random_irreducible(d, 0.5, 0.0, &mut rng);
        let mut rng = ChaCha8Rng::seed_from_u64(b);
        let q = generate::random_irreducible(d, 0.5, 0.0, &mut rng);
        let pq = metrics::chain_distance(&p, &q).unwrap();
        prop_assert!((pq - metrics::chain_distance(&q, &p).unwrap()).abs() < 1e-12);
        prop_assert!(metrics::chain_distance(&p, &p).unwrap().abs() < 1e-10);
    }

    #[test]
    fn iid_statistic_ignores_sample_order(n in 2usize..20, seed: u64) {
        let c = Constants::default();
        let pbar = vec![1.0 / n as f64; n];
        let m = iid_sample_size(n, 0.5, 0.1, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples: Vec<usize> = (0..m).map(|k| (k * 31 + k * k) % n).collect();
        let a = iid_test(&samples, &pbar, 0.5, 0.1, seed, &c).unwrap();
        samples.shuffle(&mut rng);
        let b = iid_test(&samples, &pbar, 0.5, 0.1, seed, &c).unwrap();
        prop_assert_eq!(a.statistic, b.statistic);
        prop_assert_eq!(a.decision, b.decision);
        prop_assert_eq!(a.decision == Decision::Reject, a.statistic > a.threshold);
    }

    #[test]
    fn budget_shrinks_with_eps_and_grows_as_mass_shrinks(d in 2usize..50, eps in 0.05..0.9f64, pi in 0.001..0.4f64) {
        let c = Constants::default();
        let base = identity::trajectory_budget(d, pi, eps, &c).unwrap();
        prop_assert!(identity::trajectory_budget(d, pi, eps * 1.1, &c).unwrap() < base);
        prop_assert!(identity::trajectory_budget(d, pi * 0.9, eps, &c).unwrap() > base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lp_value_is_below_every_admissible_cut(d in 3usize..=7, seed: u64, t in 0usize..3) {
        let p = reversible(d, seed);
        let ctx = CutContext::new(&p).unwrap();
        let ambient = subset::full(d);
        let constrained: Vec<usize> = (0..t.min(d - 1)).collect();
        let lp = solve_spccc_lp(&p, &ambient, &constrained).unwrap();
        let (_, best) = ctx.min_cut_metric_ratio_bruteforce(&ambient, &constrained).unwrap();
        prop_assert!(lp.objective <= best * (1.0 + 1e-7) + 1e-12);
        prop_assert!(lp.triangle_violation() < 1e-7);
        prop_assert!((lp.normalization(&ctx) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn partition_covers_every_state_once(d in 2usize..=9, seed: u64, beta in 0.02..0.4f64) {
        let p = reversible(d, seed);
        let part = partition_states(&p, beta, seed).unwrap();
        prop_assert!(part.is_exact_partition(d));
        let again = partition_states(&p, beta, seed).unwrap();
        prop_assert_eq!(part, again);
    }

    #[test]
    fn longer_trajectory_keeps_the_same_samples(seed: u64, cut in 200usize..2000, l in 1usize..60) {
        let p = reversible(4, seed);
        let pi = chain::stationary_distribution(&p).unwrap();
        let full = sampling::simulate(&p, &pi, 4000, seed).unwrap();
        let short = Trajectory::observed(4, full.states[..cut].to_vec()).unwrap();
        let set = vec![0, 2, 3];
        let nu = pi.conditioned_on(&set).unwrap();
        let a = sampling::iid_generate(&short, &set, &nu, l, 7).unwrap();
        let b = sampling::iid_generate(&full, &set, &nu, l, 7).unwrap();
        if let IidOutcome::Samples(s) = a {
            prop_assert_eq!(b, IidOutcome::Samples(s));
        }
    }
}

#[test]
fn cut_metric_vanishes_exactly_within_sides() {
    let m = CutMetric::new(&[1, 3]);
    assert_eq!(m.distance(1, 3), 0.0);
    assert_eq!(m.distance(0, 2), 0.0);
    assert_eq!(m.distance(0, 3), 1.0);
}

#[test]
fn verdict_follows_first_component_with_samples() {
    let k = generate::block_chain(&[3, 3], 0.001);
    let pi = chain::stationary_distribution(&k).unwrap();
    let m = identity::trajectory_budget(6, pi.min(), 0.3, &Constants::default()).unwrap() as usize;
    for seed in 0..4 {
        let traj = sampling::simulate(&k, &ProbVector::point_mass(6, 5), m / 4, seed).unwrap();
        let report = identity::identity_test(&k, &traj, &TestConfig::new(0.3, seed)).unwrap();
        let (last, earlier) = report.per_component.split_last().unwrap();
        assert!(earlier.iter().all(|t| t.fail.is_some() && t.verdict.is_none()));
        match &last.verdict {
            Some(v) => {
                assert_eq!(report.verdict, v.decision);
                assert_eq!(report.tested_component.as_ref(), Some(&last.states));
            }
            None => {
                assert_eq!(report.verdict, Decision::Reject);
                assert_eq!(report.per_component.len(), report.partition_used.components.len());
            }
        }
    }
}

#[test]
fn identity_test_is_deterministic_given_seed() {
    let k = generate::block_chain(&[2, 2], 0.2);
    let pi = chain::stationary_distribution(&k).unwrap();
    let traj = sampling::simulate(&k, &pi, 20_000, 3).unwrap();
    let cfg = TestConfig::new(0.5, 11);
    assert_eq!(identity::identity_test(&k, &traj, &cfg).unwrap(), identity::identity_test(&k, &traj, &cfg).unwrap());
}

/// Successors collected at early and late visits to a state follow the same
/// law: a two-sample chi-squared homogeneity test at level 0.01.
#[test]
fn successors_at_early_and_late_visits_agree() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let p = reversible(5, 21);
    let pi = chain::stationary_distribution(&p).unwrap();
    let traj = sampling::simulate(&p, &pi, 200_000, 21).unwrap();
    let schedule = sampling::HittingSchedule::new(&traj);
    for i in 0..5 {
        let visits: Vec<usize> = schedule.visits[i].iter().copied().filter(|&t| t + 1 < traj.len()).collect();
        let half = visits.len() / 2;
        let mut table = [[0.0f64; 5]; 2];
        for (k, &t) in visits.iter().enumerate() {
            table[(k >= half) as usize][traj.states[t + 1]] += 1.0;
        }
        let rows = [table[0].iter().sum::<f64>(), table[1].iter().sum::<f64>()];
        let total = rows[0] + rows[1];
        let mut stat = 0.0;
        let mut cols = 0;
        for j in 0..5 {
            let col = table[0][j] + table[1][j];
            if col == 0.0 {
                continue;
            }
            cols += 1;
            for r in 0..2 {
                let e = rows[r] * col / total;
                stat += (table[r][j] - e).powi(2) / e;
            }
        }
        let pvalue = 1.0 - ChiSquared::new((cols - 1) as f64).unwrap().cdf(stat);
        assert!(pvalue >= 0.01, "state {i}: p-value {pvalue}");
    }
}
