use cmu_core::leaderboard::{
    acc_posterior, allocate_prizes, prob_best, rank_distribution, Submission,
};
use cmu_core::rng::seeded;
use cmu_core::Prior;
use proptest::prelude::*;
use rand_distr::{Beta, Distribution};

/// Rank-1 probabilities by plain independent sampling.
fn oracle_first(subs: &[Submission], draws: usize) -> Vec<f64> {
    let dists: Vec<Beta<f64>> = subs
        .iter()
        .map(|s| {
            let b = acc_posterior(s, Prior::Laplace).unwrap();
            Beta::new(b.alpha, b.beta).unwrap()
        })
        .collect();
    let mut rng = seeded(0xabcdef);
    let mut wins = vec![0usize; subs.len()];
    for _ in 0..draws {
        let xs: Vec<f64> = dists.iter().map(|d| d.sample(&mut rng)).collect();
        let best = (0..xs.len()).max_by(|&i, &j| xs[i].total_cmp(&xs[j])).unwrap();
        wins[best] += 1;
    }
    wins.into_iter().map(|w| w as f64 / draws as f64).collect()
}

#[test]
fn three_way_matches_independent_oracle() {
    let subs = vec![
        Submission::new("a", 0.95, 300).unwrap(),
        Submission::new("b", 0.94, 300).unwrap(),
        Submission::new("c", 0.9, 100).unwrap(),
    ];
    let m = rank_distribution(&subs, Prior::Laplace, 200_000, 5).unwrap();
    let oracle = oracle_first(&subs, 1_000_000);
    for (s, o) in oracle.iter().enumerate() {
        assert!((m.entries[s][0] - o).abs() < 0.01, "{s}: {} vs {o}", m.entries[s][0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn higher_accuracy_ranks_first_more_often(lo in 50u64..90, gap in 1u64..10, n in 100u64..1000, seed in 0u64..100) {
        let a = lo as f64 / 100.0;
        let b = (lo + gap) as f64 / 100.0;
        let subs = vec![Submission::new("lo", a, n).unwrap(), Submission::new("hi", b, n).unwrap()];
        let m = rank_distribution(&subs, Prior::Laplace, 20_000, seed).unwrap();
        prop_assert!(m.entries[1][0] > m.entries[0][0]);
        let best = prob_best(&subs, &m).unwrap();
        prop_assert_eq!(best.name.as_str(), "hi");
    }

    #[test]
    fn rows_and_columns_sum_to_one(accs in prop::collection::vec(50u64..100, 2..7), seed in 0u64..100) {
        let subs: Vec<Submission> = accs.iter().enumerate()
            .map(|(i, &a)| Submission::new(format!("s{i}"), a as f64 / 100.0, 100).unwrap())
            .collect();
        let m = rank_distribution(&subs, Prior::Laplace, 5_000, seed).unwrap();
        for s in m.row_sums().into_iter().chain(m.column_sums()) {
            prop_assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn expected_prizes_sum_to_pool(prizes in prop::collection::vec(0.0f64..1e4, 1..4), seed in 0u64..100) {
        let subs: Vec<Submission> = (0..4)
            .map(|i| Submission::new(format!("s{i}"), 0.9 - i as f64 * 0.01, 1000).unwrap())
            .collect();
        let m = rank_distribution(&subs, Prior::Laplace, 5_000, seed).unwrap();
        let alloc = allocate_prizes(&m, &prizes).unwrap();
        let pool: f64 = prizes.iter().sum();
        prop_assert!((alloc.total() - pool).abs() < 1e-6 * pool.max(1.0));
    }
}

#[test]
fn more_prizes_than_ranks_rejected() {
    let subs = vec![Submission::new("a", 0.9, 10).unwrap(), Submission::new("b", 0.8, 10).unwrap()];
    let m = rank_distribution(&subs, Prior::Laplace, 1_000, 1).unwrap();
    assert!(allocate_prizes(&m, &[3.0, 2.0, 1.0]).is_err());
}

#[test]
fn same_seed_same_matrix() {
    let subs = vec![Submission::new("a", 0.9, 50).unwrap(), Submission::new("b", 0.88, 50).unwrap()];
    let a = rank_distribution(&subs, Prior::Jeffreys, 10_000, 77).unwrap();
    let b = rank_distribution(&subs, Prior::Jeffreys, 10_000, 77).unwrap();
    assert_eq!(a, b);
}
