//! Exponential-kernel Hawkes intensities.
//!
//! Every event contributes `alpha * nu * exp(-beta * nu * tau)` to the
//! intensity of the agents it excites, `tau` time units after it happened.
//! The endogenous term (`alpha_n`) is driven by an agent's own events, the
//! exogenous term (`alpha_x`) by the events of its lattice neighbors.
//!
//! On a `k`-regular lattice with common parameters, the branching matrix has
//! a single Gershgorin disk centred on `alpha_n / beta` with radius
//! `k * alpha_x / beta`, so `(alpha_n + k * alpha_x) / beta < 1` is a
//! sufficient stationarity condition and also the exact spectral radius.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Which excitation channel an event feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Excitation {
    /// The agent's own past events.
    Endo,
    /// Past events of lattice neighbors.
    Exo,
}

/// Population-common Hawkes parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub rho: f64,
    pub alpha_n: f64,
    pub alpha_x: f64,
    pub beta: f64,
    pub nu: f64,
}

impl KernelParams {
    pub fn new(rho: f64, alpha_n: f64, alpha_x: f64, beta: f64, nu: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(invalid(
                "rho",
                format!("must be finite and >= 0, got {rho}"),
            ));
        }
        for (name, a) in [("alpha_n", alpha_n), ("alpha_x", alpha_x)] {
            if !(0.0..1.0).contains(&a) {
                return Err(invalid(name, format!("must lie in [0, 1), got {a}")));
            }
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(invalid(
                "beta",
                format!("must be finite and > 0, got {beta}"),
            ));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(invalid("nu", format!("must be finite and > 0, got {nu}")));
        }
        Ok(Self {
            rho,
            alpha_n,
            alpha_x,
            beta,
            nu,
        })
    }

    /// Homogeneous Poisson process with rate `rho`.
    pub fn poisson(rho: f64) -> Result<Self> {
        Self::new(rho, 0.0, 0.0, 1.0, 1.0)
    }

    pub fn alpha(&self, which: Excitation) -> f64 {
        match which {
            Excitation::Endo => self.alpha_n,
            Excitation::Exo => self.alpha_x,
        }
    }

    /// Intensity jump `g(0) = alpha * nu` caused by one event.
    pub fn jump(&self, which: Excitation) -> f64 {
        self.alpha(which) * self.nu
    }

    /// Exponential decay rate `beta * nu` shared by both channels.
    pub fn decay_rate(&self) -> f64 {
        self.beta * self.nu
    }

    /// Fails with [`Error::NonStationary`] unless the Gershgorin bound is below one.
    pub fn check_stationary(&self, k: usize) -> Result<()> {
        let (_, upper) = gershgorin_bounds(self.alpha_n, self.alpha_x, self.beta, k)?;
        if upper >= 1.0 {
            return Err(Error::NonStationary {
                bound: upper,
                alpha_n: self.alpha_n,
                alpha_x: self.alpha_x,
                beta: self.beta,
                k,
            });
        }
        Ok(())
    }

    /// Long-run per-agent event rate on a `k`-regular lattice.
    pub fn lattice_mean_rate(&self, k: usize) -> Result<f64> {
        self.check_stationary(k)?;
        let load = (self.alpha_n + k as f64 * self.alpha_x) / self.beta;
        Ok(self.rho / (1.0 - load))
    }

    /// E-folding time of the population-mean intensity towards its
    /// stationary value: `1 / (nu * (beta - alpha_n - k * alpha_x))`.
    pub fn relaxation_time(&self, k: usize) -> Result<f64> {
        self.check_stationary(k)?;
        Ok(1.0 / (self.nu * (self.beta - self.alpha_n - k as f64 * self.alpha_x)))
    }

    pub fn is_poisson(&self) -> bool {
        self.alpha_n == 0.0 && self.alpha_x == 0.0
    }
}

/// Timing model of the donation stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseKind {
    /// One action per agent per generation, no point process.
    Standard,
    Poisson,
    Endo,
    Exo,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [
        CaseKind::Standard,
        CaseKind::Poisson,
        CaseKind::Endo,
        CaseKind::Exo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Standard => "standard",
            CaseKind::Poisson => "poisson",
            CaseKind::Endo => "endo",
            CaseKind::Exo => "exo",
        }
    }

    pub fn is_hawkes(&self) -> bool {
        !matches!(self, CaseKind::Standard)
    }

    /// `(alpha_n, alpha_x)` for a common excitation strength `alpha`.
    pub fn excitation(&self, alpha: f64) -> (f64, f64) {
        match self {
            CaseKind::Standard | CaseKind::Poisson => (0.0, 0.0),
            CaseKind::Endo => (alpha, 0.0),
            CaseKind::Exo => (0.0, alpha),
        }
    }

    /// Decay ratio from the `beta = o_n + k * o_x` rule (Poisson uses 1).
    pub fn default_beta(&self, k: usize) -> f64 {
        match self {
            CaseKind::Exo => k as f64,
            _ => 1.0,
        }
    }

    /// Calibrated kernel parameters for this case, or `None` for the
    /// standard model. `rho` is chosen so the lattice-wide expected rate
    /// equals `target_rate`.
    pub fn kernel_params(
        &self,
        alpha: f64,
        nu: f64,
        target_rate: f64,
        k: usize,
        beta_override: Option<f64>,
    ) -> Result<Option<KernelParams>> {
        if !self.is_hawkes() {
            return Ok(None);
        }
        let (alpha_n, alpha_x) = self.excitation(alpha);
        let beta = beta_override.unwrap_or_else(|| self.default_beta(k));
        let rho = calibrate_rho(target_rate, alpha_n, alpha_x, beta, k)?;
        KernelParams::new(rho, alpha_n, alpha_x, beta, nu).map(Some)
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" => Ok(CaseKind::Standard),
            "poisson" => Ok(CaseKind::Poisson),
            "endo" => Ok(CaseKind::Endo),
            "exo" => Ok(CaseKind::Exo),
            other => Err(invalid(
                "case",
                format!("unknown case `{other}` (expected standard, poisson, endo or exo)"),
            )),
        }
    }
}

/// Kernel contribution of a single event `tau` time units ago.
pub fn kernel_eval(params: &KernelParams, which: Excitation, tau: f64) -> f64 {
    if tau < 0.0 {
        return 0.0;
    }
    params.jump(which) * (-params.decay_rate() * tau).exp()
}

/// Intensity at `t` given explicit event histories. Every event must lie
/// strictly before `t`.
pub fn intensity_at(
    params: &KernelParams,
    own_events: &[f64],
    neighbor_events: &[f64],
    t: f64,
) -> Result<f64> {
    let mut lambda = params.rho;
    for (events, which) in [
        (own_events, Excitation::Endo),
        (neighbor_events, Excitation::Exo),
    ] {
        for &te in events {
            if te >= t {
                return Err(Error::EventNotInPast { event: te, t });
            }
            lambda += kernel_eval(params, which, t - te);
        }
    }
    Ok(lambda)
}

/// Expected number of direct offspring per event, `alpha / beta`.
/// `nu` integrates out.
pub fn branching_ratio(alpha: f64, beta: f64, nu: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be > 0, got {beta}")));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(invalid("nu", format!("must be > 0, got {nu}")));
    }
    Ok(alpha / beta)
}

/// `rho / (1 - gamma)` for a single self-exciting generator (`alpha_n`).
pub fn expected_intensity_single(params: &KernelParams) -> Result<f64> {
    let gamma = branching_ratio(params.alpha_n, params.beta, params.nu)?;
    if gamma >= 1.0 {
        return Err(Error::NonStationary {
            bound: gamma,
            alpha_n: params.alpha_n,
            alpha_x: 0.0,
            beta: params.beta,
            k: 0,
        });
    }
    Ok(params.rho / (1.0 - gamma))
}

/// Baseline `rho` that makes every agent's expected rate equal
/// `target_rate` on a `k`-regular lattice.
pub fn calibrate_rho(
    target_rate: f64,
    alpha_n: f64,
    alpha_x: f64,
    beta: f64,
    k: usize,
) -> Result<f64> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(invalid(
            "target_rate",
            format!("must be finite and > 0, got {target_rate}"),
        ));
    }
    let (_, upper) = gershgorin_bounds(alpha_n, alpha_x, beta, k)?;
    if upper >= 1.0 {
        return Err(Error::NonStationary {
            bound: upper,
            alpha_n,
            alpha_x,
            beta,
            k,
        });
    }
    Ok(target_rate * (1.0 - upper))
}

/// Eigenvalue bounds `((alpha_n - k alpha_x)/beta, (alpha_n + k alpha_x)/beta)`
/// of the branching matrix.
pub fn gershgorin_bounds(alpha_n: f64, alpha_x: f64, beta: f64, k: usize) -> Result<(f64, f64)> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be > 0, got {beta}")));
    }
    let centre = alpha_n / beta;
    let radius = k as f64 * alpha_x / beta;
    Ok((centre - radius, centre + radius))
}
