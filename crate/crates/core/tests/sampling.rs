use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use planted::model::text::{attach_truth, read_instance, read_partition, write_instance, write_partition};
use planted::model::{
    build_partition, expected_matrices, sample_general, sample_graph, DistributionSpec, Instance, ModelParams,
    PartitionSpec, SampleOptions,
};

/// Descending sizes in `[1, 12]` split into contiguous superclusters.
fn partition() -> impl Strategy<Value = PartitionSpec> {
    prop::collection::vec(1usize..=12, 1..6).prop_flat_map(|mut sizes| {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let k = sizes.len();
        prop::collection::vec(any::<bool>(), k - 1).prop_map(move |cuts| {
            let mut counts = vec![1];
            for cut in cuts {
                if cut {
                    counts.push(1);
                } else {
                    *counts.last_mut().unwrap() += 1;
                }
            }
            build_partition(sizes.iter().sum(), &sizes, &counts).unwrap()
        })
    })
}

fn probabilities() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..1.0, 0.0f64..1.0).prop_filter_map("q < p", |(a, b)| (a != b).then(|| (a.max(b), a.min(b))))
}

fn assert_graph(inst: &Instance) -> Result<(), TestCaseError> {
    let m = &inst.matrix;
    for u in 0..m.dim() {
        prop_assert_eq!(m.get(u, u), 0.0);
        for v in 0..m.dim() {
            prop_assert_eq!(m.get(u, v), m.get(v, u));
            let x = m.get(u, v);
            prop_assert!(x == 0.0 || x == 1.0);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_samples_are_simple_graphs(spec in partition(), (p, q) in probabilities(), seed in any::<u64>(), permute in any::<bool>()) {
        let inst = sample_graph(&spec, &ModelParams::new(p, q, 0.01, 1.0), seed, SampleOptions { permute }).unwrap();
        assert_graph(&inst)?;
        let mut seen = vec![0usize; spec.k()];
        for &l in &inst.labels {
            seen[l] += 1;
        }
        prop_assert_eq!(seen, spec.sizes().to_vec());
    }

    #[test]
    fn general_entries_within_kappa(spec in partition(), seed in any::<u64>(), p in 0.2f64..0.8, w in 0.01f64..0.2) {
        let d1 = DistributionSpec::uniform(p - w, p + w).unwrap();
        let d2 = DistributionSpec::two_point(-0.5, 0.5, 0.3).unwrap();
        let d3 = DistributionSpec::uniform(-w, w).unwrap();
        let inst = sample_general(&spec, &d1, &d2, &d3, seed, SampleOptions::default()).unwrap();
        let m = &inst.matrix;
        for u in 0..m.dim() {
            for v in 0..m.dim() {
                prop_assert_eq!(m.get(u, v), m.get(v, u));
                let law = if u == v { &d3 } else if inst.labels[u] == inst.labels[v] { &d1 } else { &d2 };
                prop_assert!((m.get(u, v) - law.mean()).abs() <= law.kappa() + 1e-12);
            }
        }
    }

    #[test]
    fn two_point_embeds_bernoulli(spec in partition(), (p, q) in probabilities(), seed in any::<u64>()) {
        let graph = sample_graph(&spec, &ModelParams::new(p, q, 0.01, 1.0), seed, SampleOptions::default()).unwrap();
        let general = sample_general(
            &spec,
            &DistributionSpec::two_point(0.0, 1.0, p).unwrap(),
            &DistributionSpec::two_point(0.0, 1.0, q).unwrap(),
            &DistributionSpec::point(0.0),
            seed,
            SampleOptions::default(),
        )
        .unwrap();
        prop_assert_eq!(graph.matrix, general.matrix);
    }

    #[test]
    fn expected_difference_is_q_ones(spec in partition(), (p, q) in probabilities()) {
        let (a, b) = expected_matrices(&spec, &ModelParams::new(p, q, 0.01, 1.0));
        let n = spec.n();
        for u in 0..n {
            for v in 0..n {
                prop_assert!((a.get(u, v) - b.get(u, v) - q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn text_roundtrip(spec in partition(), (p, q) in probabilities(), seed in any::<u64>()) {
        let inst = sample_graph(&spec, &ModelParams::new(p, q, 0.01, 1.0), seed, SampleOptions::default()).unwrap();
        let mut back = read_instance(&write_instance(&inst)).unwrap();
        prop_assert_eq!(&back.matrix, &inst.matrix);
        prop_assert_eq!(back.truth.sizes(), inst.truth.sizes());
        let truth = read_partition(&write_partition(&inst.truth_clusters())).unwrap();
        attach_truth(&mut back, &truth).unwrap();
        prop_assert_eq!(back.labels, inst.labels);
    }
}

#[test]
fn within_cluster_density_concentrates() {
    // one cluster of 200 is an Erdos-Renyi graph; pool 100 seeds
    let spec = build_partition(200, &[200], &[1]).unwrap();
    let p = 0.3;
    let params = ModelParams::new(p, 0.0, 0.01, 1.0);
    let mut edges = 0.0;
    let mut pairs = 0.0;
    for seed in 0..100 {
        let inst = sample_graph(&spec, &params, seed, SampleOptions::default()).unwrap();
        for u in 0..200 {
            for v in u + 1..200 {
                edges += inst.matrix.get(u, v);
                pairs += 1.0;
            }
        }
    }
    let density = edges / pairs;
    let sigma = (p * (1.0 - p) / pairs).sqrt();
    assert!((density - p).abs() <= 5.0 * sigma, "density {density}, 5 sigma {}", 5.0 * sigma);
}

#[test]
fn uniform_interval_support_over_ten_thousand_draws() {
    let p = 0.6;
    let d = DistributionSpec::uniform(p - 0.1, p + 0.1).unwrap();
    assert!((d.kappa() - 0.1).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
    assert!(draws.iter().all(|x| (x - p).abs() <= 0.1));
    // both ends of the interval are approached
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo < p - 0.099 && hi > p + 0.099);
}

#[test]
fn empirical_variance_within_three_percent() {
    let laws = [
        DistributionSpec::bernoulli(0.5).unwrap(),
        DistributionSpec::uniform(-1.0, 3.0).unwrap(),
        DistributionSpec::two_point(-0.5, 0.5, 0.5).unwrap(),
        DistributionSpec::two_point(0.0, 1.0, 0.85).unwrap(),
    ];
    for (i, d) in laws.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let s2 = d.variance();
        assert!(var <= s2 + 0.03 * s2, "{d}: empirical {var}, sigma^2 {s2}");
    }
}

#[test]
fn point_masses_reproduce_the_mean_matrix() {
    let spec = build_partition(7, &[4, 3], &[1, 1]).unwrap();
    let inst = sample_general(
        &spec,
        &DistributionSpec::point(0.7),
        &DistributionSpec::point(0.2),
        &DistributionSpec::point(0.0),
        5,
        SampleOptions::default(),
    )
    .unwrap();
    for u in 0..7 {
        for v in 0..7 {
            let expected = if u == v {
                0.0
            } else if inst.labels[u] == inst.labels[v] {
                0.7
            } else {
                0.2
            };
            assert_eq!(inst.matrix.get(u, v), expected);
        }
    }
}

#[test]
fn seeds_are_reproducible() {
    let spec = build_partition(60, &[30, 20, 10], &[1, 2]).unwrap();
    let params = ModelParams::new(0.7, 0.3, 0.01, 1.0);
    let a = sample_graph(&spec, &params, 42, SampleOptions::default()).unwrap();
    let b = sample_graph(&spec, &params, 42, SampleOptions::default()).unwrap();
    let c = sample_graph(&spec, &params, 43, SampleOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.matrix, c.matrix);
}
