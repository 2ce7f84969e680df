use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucmf::clustering::ClusterAssignment;
use ucmf::dataset::{Rating, RatingDataset};
use ucmf::similarity::{build_neighbor_weights, vss};

fn random_dataset(seed: u64, n: usize, m: usize, density: f64) -> RatingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratings = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.random::<f64>() < density {
                ratings.push(Rating { user: i as u32, item: j as u32, value: rng.random_range(1..=5) as f64 });
            }
        }
    }
    RatingDataset::from_dense(n, m, ratings).unwrap()
}

fn scaled(data: &RatingDataset, factor: f64) -> RatingDataset {
    let ratings = data
        .ratings()
        .iter()
        .map(|r| Rating { value: r.value * factor, ..*r })
        .collect();
    RatingDataset::from_dense(data.n_users(), data.n_items(), ratings).unwrap()
}

#[test]
fn hand_worked_pair() {
    let r = |user, item, value| Rating { user, item, value };
    let data = RatingDataset::from_dense(2, 2, vec![r(0, 0, 4.0), r(0, 1, 2.0), r(1, 0, 2.0), r(1, 1, 4.0)]).unwrap();
    assert!((vss(&data, 0, 1) - 0.8).abs() < 1e-15);
    let a = ClusterAssignment::from_labels(&[0.0, 0.0], 1, vec![0, 0], 1).unwrap();
    let w = build_neighbor_weights(&a, &data).unwrap();
    assert_eq!(w.neighbors(0), &[1]);
    assert_eq!(w.neighbors(1), &[0]);
    assert!((w.weights(0)[0] - 0.8).abs() < 1e-15);
    assert!((w.weights(1)[0] - 0.8).abs() < 1e-15);
}

proptest! {
    #[test]
    fn symmetric_and_bounded(seed in 0u64..5000, n in 2usize..12, m in 1usize..12, density in 0.1f64..0.9) {
        let data = random_dataset(seed, n, m, density);
        for i in 0..n as u32 {
            for f in 0..n as u32 {
                let s = vss(&data, i, f);
                prop_assert_eq!(s, vss(&data, f, i));
                prop_assert!((0.0..=1.0).contains(&s), "{}", s);
            }
            let own = vss(&data, i, i);
            if data.user_ratings(i).is_empty() {
                prop_assert_eq!(own, 0.0);
            } else {
                prop_assert!((own - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invariant_to_common_rescaling(seed in 0u64..5000, factor in 0.01f64..100.0) {
        let data = random_dataset(seed, 6, 8, 0.6);
        let big = scaled(&data, factor);
        for i in 0..6 {
            for f in 0..6 {
                prop_assert!((vss(&data, i, f) - vss(&big, i, f)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn neighbor_lists_follow_the_clusters(seed in 0u64..5000, n in 1usize..15, k in 1usize..5) {
        let k = k.min(n);
        let data = random_dataset(seed, n, 10, 0.4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let a = ClusterAssignment::from_labels(&vec![0.0; n], 1, labels.clone(), k).unwrap();
        let w = build_neighbor_weights(&a, &data).unwrap();

        let sizes = a.cluster_sizes();
        let expected: usize = sizes.iter().map(|s| s * (s - 1)).sum();
        prop_assert_eq!(w.total_entries(), expected);

        for i in 0..n {
            let mut want: Vec<u32> = (0..n).filter(|&f| f != i && labels[f] == labels[i]).map(|f| f as u32).collect();
            want.sort_unstable();
            let mut got: Vec<(u32, f64)> = w.iter(i).collect();
            got.sort_by_key(|&(f, _)| f);
            prop_assert_eq!(got.iter().map(|&(f, _)| f).collect::<Vec<_>>(), want);
            for (f, s) in got {
                prop_assert!((s - vss(&data, i as u32, f)).abs() < 1e-14);
            }
            let sum: f64 = w.weights(i).iter().sum();
            prop_assert!((w.weight_sum(i) - sum).abs() < 1e-12);
        }
    }
}
