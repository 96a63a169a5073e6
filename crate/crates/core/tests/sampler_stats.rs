mod common;

use common::*;
use hawkes_coop_core::{
    sample_lattice, sample_single, CaseKind, EventTimeline, KernelParams, Lattice, LatticeSampler,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn poisson_lattice_counts_have_unit_mean_and_variance() {
    let lat = Lattice::new(20, 4).unwrap();
    let params = KernelParams::poisson(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = Vec::new();
    for _ in 0..50 {
        let tl = sample_lattice(&params, &lat, 1.0, &mut rng).unwrap();
        counts.extend(tl.counts().iter().map(|&c| c as f64));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    assert!((var - 1.0).abs() < 0.05, "var {var}");
}

#[test]
fn calibrated_lattice_rates_are_one() {
    let lat = Lattice::new(12, 4).unwrap();
    for case in [CaseKind::Endo, CaseKind::Exo] {
        for alpha in [0.3, 0.8] {
            let params = case
                .kernel_params(alpha, 1.0, 1.0, 4, None)
                .unwrap()
                .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut sampler = LatticeSampler::new(params, &lat, &mut rng).unwrap();
            sampler.warm_up(&lat, &mut rng);
            let mut tl = EventTimeline::new(lat.len());
            sampler.run_window(&lat, 2000.0, &mut rng, &mut tl);
            let rate = tl.len() as f64 / (2000.0 * lat.len() as f64);
            assert!(
                (rate - 1.0).abs() < 0.03,
                "{case} alpha={alpha}: rate {rate}"
            );
        }
    }
}

#[test]
fn uncalibrated_rate_matches_stationary_formula() {
    let lat = Lattice::new(10, 4).unwrap();
    let params = KernelParams::new(0.4, 0.2, 0.1, 1.5, 2.0).unwrap();
    let expected = params.lattice_mean_rate(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sampler = LatticeSampler::new(params, &lat, &mut rng).unwrap();
    sampler.warm_up(&lat, &mut rng);
    let mut tl = EventTimeline::new(lat.len());
    sampler.run_window(&lat, 3000.0, &mut rng, &mut tl);
    let rate = tl.len() as f64 / (3000.0 * lat.len() as f64);
    assert!(
        (rate / expected - 1.0).abs() < 0.03,
        "rate {rate} vs {expected}"
    );
}

#[test]
fn endo_lattice_agent_matches_single_generator() {
    // Without neighbor coupling every lattice agent is an independent copy
    // of the single-agent process.
    let params = CaseKind::Endo
        .kernel_params(0.6, 1.0, 1.0, 4, None)
        .unwrap()
        .unwrap();
    let lat = Lattice::new(10, 4).unwrap();
    let horizon = 5.0;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut single = Vec::new();
    for _ in 0..4000 {
        single.push(sample_single(&params, horizon, &mut rng).unwrap().len() as f64);
    }
    let mut lattice = Vec::new();
    for _ in 0..40 {
        let mut sampler = LatticeSampler::new(params, &lat, &mut rng).unwrap();
        let mut tl = EventTimeline::new(lat.len());
        sampler.run_window(&lat, horizon, &mut rng, &mut tl);
        lattice.extend(tl.counts().iter().map(|&c| c as f64));
    }
    let (d, p) = ks_two_sample(&single, &lattice);
    assert!(p > 0.01, "D={d} p={p}");
}

#[test]
fn heap_scheduler_matches_naive_rescan_short_run() {
    let lat = Lattice::new(4, 4).unwrap();
    for case in [CaseKind::Endo, CaseKind::Exo] {
        let params = case.kernel_params(0.7, 1.5, 1.0, 4, None).unwrap().unwrap();
        for (what, d, p) in compare_with_naive(&params, &lat, 600, 8.0, 9) {
            assert!(p > 0.01, "{case} {what}: D={d} p={p}");
        }
    }
}

#[test]
fn ks_helpers_behave() {
    let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    let (d, p) = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0));
    assert!(d < 1e-3 && p > 0.99);
    let shifted: Vec<f64> = xs.iter().map(|x| x + 0.2).collect();
    assert!(ks_two_sample(&xs, &shifted).1 < 1e-6);
    assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-3);
}
