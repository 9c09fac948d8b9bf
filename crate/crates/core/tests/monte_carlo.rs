//! Seeded simulations with frozen outcomes.

use planted::model::{build_partition, sample_graph, ModelParams, SampleOptions};
use planted::recovery::{
    estimate_shat, estimate_supercluster_counts, extract_cluster, recover_auto, recover_nonuniform, RecoveryConfig,
};
use planted::spectral::{eigenvalues, spectral_norm};
use planted::verify::{best_overlap, compare_partitions, is_refinement};

#[test]
fn extraction_on_the_true_cluster() {
    let spec = build_partition(400, &[200, 200], &[2]).unwrap();
    let params = ModelParams::new(0.9, 0.1, 0.01, 1.0);
    let cfg = RecoveryConfig::bernoulli(0.9, 0.1, 0.01);
    let hits = (0..100)
        .filter(|&seed| {
            let inst = sample_graph(&spec, &params, 3_000 + seed, SampleOptions::default()).unwrap();
            let truth = inst.truth_clusters();
            extract_cluster(&inst.matrix, &truth[0], 200.0, &cfg) == truth[0]
        })
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn shat_sandwich_when_the_norm_event_holds() {
    // nu = 1 covers ||B - B-hat|| at this size, and eps = 0.25 is the
    // smallest slack with 2 nu sqrt(n) <= eps (p - q) s_k1
    let spec = build_partition(400, &[200, 200], &[2]).unwrap();
    let (p, q, nu, eps) = (0.9, 0.1, 1.0, 0.25);
    let params = ModelParams::new(p, q, eps, 1.0);
    let cfg = RecoveryConfig::bernoulli(p, q, eps).with_noise_constant(nu);
    let bound = nu * 20.0;
    assert!(2.0 * bound <= eps * (p - q) * 200.0);
    let mut events = 0;
    for seed in 0..40 {
        let inst = sample_graph(&spec, &params, 4_000 + seed, SampleOptions::default()).unwrap();
        let b_hat = inst.b_hat();
        let (_, b) = inst.expected();
        if spectral_norm(&b_hat.sub(&b)).unwrap() > bound {
            continue;
        }
        events += 1;
        let s_hat = estimate_shat(eigenvalues(&b_hat).unwrap()[0], &cfg, 400);
        assert!(s_hat >= 200.0, "seed {seed}: s-hat {s_hat}");
        assert!(s_hat <= (1.0 + 2.0 * eps) * 200.0, "seed {seed}: s-hat {s_hat}");
    }
    assert_eq!(events, 40);
}

#[test]
fn selected_candidates_meet_a_single_cluster() {
    let spec = build_partition(600, &[350, 250], &[1, 1]).unwrap();
    let eps = 0.01;
    let params = ModelParams::new(0.85, 0.15, eps, 1.0);
    let cfg = RecoveryConfig::bernoulli(0.85, 0.15, eps)
        .with_noise_constant(0.1)
        .with_counts(&[1, 1]);
    let mut iterations = 0;
    let mut large = 0;
    for seed in 0..20 {
        let inst = sample_graph(&spec, &params, 5_000 + seed, SampleOptions::default()).unwrap();
        let r = recover_nonuniform(&inst, &cfg).unwrap();
        let truth = inst.truth_clusters();
        for t in &r.traces {
            assert!(t.candidate_size as f64 <= (1.0 + eps) * t.s_hat);
            // with counts [1, 1] the current top supercluster is the largest remaining cluster
            let remaining: Vec<&Vec<usize>> = truth
                .iter()
                .filter(|c| !r.clusters[..t.iteration].iter().any(|done| done.contains(&c[0])))
                .collect();
            let s_k1 = remaining.iter().map(|c| c.len()).max().unwrap() as f64;
            let owned: Vec<Vec<usize>> = remaining.into_iter().cloned().collect();
            iterations += 1;
            large += usize::from(best_overlap(&t.candidate, &owned) as f64 >= (1.0 - 6.0 * eps) * s_k1);
        }
    }
    assert!(large * 100 >= 95 * iterations, "{large}/{iterations}");
}

#[test]
fn refined_counts_still_recover_exactly() {
    // an understated c splits the first supercluster, which is harmless
    let spec = build_partition(470, &[200, 170, 100], &[2, 1]).unwrap();
    let c = 0.3 * spec.separation_constant();
    let params = ModelParams::new(0.8, 0.2, 0.02, c);
    let cfg = RecoveryConfig::bernoulli(0.8, 0.2, 0.02)
        .with_noise_constant(0.2)
        .with_separation(c);
    for seed in 0..20 {
        let inst = sample_graph(&spec, &params, seed, SampleOptions::default()).unwrap();
        let est = estimate_supercluster_counts(&eigenvalues(&inst.b_hat()).unwrap(), &cfg, 470).unwrap();
        assert_eq!(est, vec![1, 1, 1], "seed {seed}");
        assert!(is_refinement(&est, &[2, 1]));
        let r = recover_auto(&inst, &cfg).unwrap();
        assert!(r.is_success(), "seed {seed}: {:?}", r.status);
        assert!(compare_partitions(&r.clusters, &inst.truth_clusters()).unwrap().exact);
    }
}

#[test]
fn overstated_separation_is_reported_not_raised() {
    let spec = build_partition(300, &[160, 140], &[1, 1]).unwrap();
    let params = ModelParams::new(0.8, 0.2, 0.02, 1.0);
    let inst = sample_graph(&spec, &params, 9, SampleOptions::default()).unwrap();
    let cfg = RecoveryConfig::bernoulli(0.8, 0.2, 0.02)
        .with_noise_constant(0.2)
        .with_separation(50.0);
    let r = recover_auto(&inst, &cfg).unwrap();
    assert!(!r.is_success());
}
