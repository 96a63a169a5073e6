//! Statistical helpers and an independent reference simulator shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use hawkes_coop_core::{EventTimeline, KernelParams, Lattice, LatticeSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Asymptotic Kolmogorov survival function `P(K > x)`.
pub fn kolmogorov_q(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..200 {
        let j = j as f64;
        let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * x * x).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// One-sample KS test: returns `(D, p)`.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    (d, kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

/// Two-sample KS test: returns `(D, p)`. Ties are handled by stepping
/// through equal values together, so discrete samples are fine.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    (d, kolmogorov_q((en + 0.12 + 0.11 / en) * d))
}

pub fn inter_event_times(times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Events of each agent, split out of a joint `(time, agent)` list.
pub fn per_agent(events: &[(f64, usize)], agents: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); agents];
    for &(t, i) in events {
        out[i].push(t);
    }
    out
}

/// Per-agent inter-event gaps, pooled over agents.
pub fn pooled_gaps(events: &[(f64, usize)], agents: usize) -> Vec<f64> {
    per_agent(events, agents)
        .iter()
        .flat_map(|ts| inter_event_times(ts))
        .collect()
}

/// Reference multivariate Hawkes simulator: classic Ogata thinning on the
/// superposed process, recomputing every agent's intensity from the stored
/// event list at each proposal. Starts from an empty history at time 0.
pub fn naive_lattice<R: Rng>(
    params: &KernelParams,
    lattice: &Lattice,
    horizon: f64,
    rng: &mut R,
) -> Vec<(f64, usize)> {
    let n = lattice.len();
    let decay = params.beta * params.nu;
    // (time, weight) of every excitation an agent received
    let mut hits: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let intensity = |hits: &[(f64, f64)], t: f64| {
        params.rho
            + hits
                .iter()
                .map(|&(s, w)| w * (-decay * (t - s)).exp())
                .sum::<f64>()
    };
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let bound: f64 = hits.iter().map(|h| intensity(h, t)).sum();
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / bound;
        if t >= horizon {
            break;
        }
        let lambdas: Vec<f64> = hits.iter().map(|h| intensity(h, t)).collect();
        let total: f64 = lambdas.iter().sum();
        let u: f64 = rng.random::<f64>() * bound;
        if u >= total {
            continue;
        }
        let mut acc = 0.0;
        let mut who = n - 1;
        for (i, l) in lambdas.iter().enumerate() {
            acc += l;
            if u < acc {
                who = i;
                break;
            }
        }
        events.push((t, who));
        if params.alpha_n > 0.0 {
            hits[who].push((t, params.alpha_n * params.nu));
        }
        if params.alpha_x > 0.0 {
            for &j in lattice.neighbors(who) {
                hits[j as usize].push((t, params.alpha_x * params.nu));
            }
        }
        // drop contributions below double precision relevance
        for h in hits.iter_mut() {
            h.retain(|&(s, w)| w * (-decay * (t - s)).exp() > 1e-18);
        }
    }
    events
}

/// Events of the production sampler on `[0, horizon)` from an empty history.
pub fn heap_events<R: Rng>(
    params: &KernelParams,
    lattice: &Lattice,
    horizon: f64,
    rng: &mut R,
) -> Vec<(f64, usize)> {
    let mut sampler = LatticeSampler::new(*params, lattice, rng).expect("stationary params");
    let mut timeline = EventTimeline::new(lattice.len());
    sampler.run_window(lattice, horizon, rng, &mut timeline);
    timeline
        .events()
        .iter()
        .map(|e| (e.time, e.agent as usize))
        .collect()
}

/// Runs `runs` independent replicates of both simulators over
/// `[0, horizon)` and two-sample KS tests one observation per replicate, so
/// the samples are i.i.d.: the first inter-event gap of agent 0, agent 0's
/// event count, and the lattice-wide event count. Returns `(name, D, p)`.
pub fn compare_with_naive(
    params: &KernelParams,
    lattice: &Lattice,
    runs: usize,
    horizon: f64,
    seed: u64,
) -> Vec<(&'static str, f64, f64)> {
    let summarize = |events: &[(f64, usize)]| {
        let own: Vec<f64> = events.iter().filter(|e| e.1 == 0).map(|e| e.0).collect();
        let gap = (own.len() >= 2).then(|| own[1] - own[0]);
        (gap, own.len() as f64, events.len() as f64)
    };
    let mut heap_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut naive_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut samples: [[Vec<f64>; 2]; 3] = Default::default();
    for _ in 0..runs {
        let runs = [
            heap_events(params, lattice, horizon, &mut heap_rng),
            naive_lattice(params, lattice, horizon, &mut naive_rng),
        ];
        for (which, events) in runs.iter().enumerate() {
            let (gap, own, total) = summarize(events);
            if let Some(g) = gap {
                samples[0][which].push(g);
            }
            samples[1][which].push(own);
            samples[2][which].push(total);
        }
    }
    ["first gap", "agent count", "lattice count"]
        .into_iter()
        .zip(samples.iter())
        .map(|(name, [a, b])| {
            let (d, p) = ks_two_sample(a, b);
            (name, d, p)
        })
        .collect()
}
