//! Cooperation level and non-uniformity indices of the action counts.

use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::lattice::Lattice;

/// How the dispersion of action counts is reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SigmaForm {
    /// Sample standard deviation.
    #[default]
    StdDev,
    /// Sample variance, `1/(N-1) * sum (d_i - mean)^2`, without the root.
    Variance,
}

/// Snapshot of one generation, taken after the donation stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationStats {
    pub f_c: f64,
    pub mean_d: f64,
    pub sigma_d: f64,
    pub gamma_1: Option<f64>,
    pub r_d: f64,
}

impl GenerationStats {
    pub fn compute(
        strategies: &[Strategy],
        counts: &[u32],
        lattice: &Lattice,
        form: SigmaForm,
    ) -> Result<Self> {
        let sigma = sigma_d(counts)?;
        Ok(Self {
            f_c: fraction_cooperators(strategies),
            mean_d: mean_d(counts),
            sigma_d: match form {
                SigmaForm::StdDev => sigma,
                SigmaForm::Variance => sigma * sigma,
            },
            gamma_1: fit_gamma1(counts),
            r_d: donation_correlation(counts, lattice),
        })
    }
}

/// Running mean of generation snapshots. `gamma_1` is averaged over the
/// generations where it was fittable.
#[derive(Clone, Debug, Default)]
pub struct StatsAverager {
    n: usize,
    f_c: f64,
    mean_d: f64,
    sigma_d: f64,
    r_d: f64,
    gamma_n: usize,
    gamma_1: f64,
}

impl StatsAverager {
    pub fn push(&mut self, s: &GenerationStats) {
        self.n += 1;
        self.f_c += s.f_c;
        self.mean_d += s.mean_d;
        self.sigma_d += s.sigma_d;
        self.r_d += s.r_d;
        if let Some(g) = s.gamma_1 {
            self.gamma_n += 1;
            self.gamma_1 += g;
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> Option<GenerationStats> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        Some(GenerationStats {
            f_c: self.f_c / n,
            mean_d: self.mean_d / n,
            sigma_d: self.sigma_d / n,
            gamma_1: (self.gamma_n > 0).then(|| self.gamma_1 / self.gamma_n as f64),
            r_d: self.r_d / n,
        })
    }
}

pub fn fraction_cooperators(strategies: &[Strategy]) -> f64 {
    if strategies.is_empty() {
        return 0.0;
    }
    let c = strategies
        .iter()
        .filter(|s| **s == Strategy::Cooperate)
        .count();
    c as f64 / strategies.len() as f64
}

pub fn mean_d(counts: &[u32]) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    counts.iter().map(|&d| d as u64).sum::<u64>() as f64 / counts.len() as f64
}

/// Sample standard deviation of the action counts.
pub fn sigma_d(counts: &[u32]) -> Result<f64> {
    let n = counts.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = mean_d(counts);
    let ss: f64 = counts.iter().map(|&d| (d as f64 - mean).powi(2)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// Least-squares power-law exponent of the empirical count distribution:
/// minus the slope of `ln D(d)` against `ln d` over `d >= 1`. `None` when
/// fewer than three distinct positive counts occur.
pub fn fit_gamma1(counts: &[u32]) -> Option<f64> {
    let mut freq: Vec<u64> = Vec::new();
    for &d in counts {
        if d == 0 {
            continue;
        }
        let d = d as usize;
        if freq.len() <= d {
            freq.resize(d + 1, 0);
        }
        freq[d] += 1;
    }
    let points: Vec<(f64, f64)> = freq
        .iter()
        .enumerate()
        .filter(|&(d, &f)| d >= 1 && f > 0)
        .map(|(d, &f)| (d as f64, f as f64))
        .collect();
    power_law_exponent(&points)
}

/// Exponent `g` of `D(d) = c * d^-g` fitted to `(d, D(d))` pairs by ordinary
/// least squares in log-log space. Pairs with non-positive `d` or `D` are
/// skipped; `None` with fewer than three usable distinct `d`.
pub fn power_law_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, f)| *d > 0.0 && *f > 0.0)
        .map(|(d, f)| (d.ln(), f.ln()))
        .collect();
    if logs.len() < 3 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

/// Edge-wise similarity of neighboring action counts, in `[-1, 1]`;
/// exactly 1 when every agent has the same count.
pub fn donation_correlation(counts: &[u32], lattice: &Lattice) -> f64 {
    assert_eq!(counts.len(), lattice.len(), "counts and lattice misaligned");
    let first = counts.first().copied().unwrap_or(0);
    if counts.iter().all(|&d| d == first) {
        return 1.0;
    }
    let n = counts.len() as f64;
    let (sum, sum_sq) = counts.iter().fold((0u64, 0u64), |(s, q), &d| {
        let d = d as u64;
        (s + d, q + d * d)
    });
    let edge_sum: u64 = lattice
        .edges()
        .iter()
        .map(|&(u, v)| counts[u as usize] as u64 * counts[v as usize] as u64)
        .sum();
    let mean = sum as f64 / n;
    let mean_sq = sum_sq as f64 / n;
    let edges = lattice.edges().len() as f64;
    (edge_sum as f64 / edges - mean * mean) / (mean_sq - mean * mean)
}
