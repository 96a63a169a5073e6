//! Event timelines via Ogata thinning.
//!
//! [`sample_single`] is the textbook single-generator loop. The lattice
//! sampler runs one thinning chain per agent and keeps every agent's next
//! candidate time in an indexed min-heap, so each step costs
//! `O(log N)` plus `O(k log N)` when an accepted event excites neighbors.
//!
//! Between events an agent's intensity only decays, so the intensity at the
//! moment a candidate was drawn is a valid upper bound until either the
//! candidate fires or a neighbor's event pushes the intensity up, in which
//! case the candidate is redrawn from the new bound.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::lattice::Lattice;
use crate::point_process::{Excitation, KernelParams};

/// Number of relaxation times simulated before the first recorded window.
pub const WARMUP_RELAXATIONS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    /// Time since the start of the window.
    pub time: f64,
    pub agent: u32,
}

/// Time-ordered events of one window plus per-agent action counts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventTimeline {
    events: Vec<Event>,
    counts: Vec<u32>,
}

impl EventTimeline {
    pub fn new(agents: usize) -> Self {
        Self {
            events: Vec::new(),
            counts: vec![0; agents],
        }
    }

    pub fn clear(&mut self, agents: usize) {
        self.events.clear();
        self.counts.clear();
        self.counts.resize(agents, 0);
    }

    pub fn push(&mut self, time: f64, agent: u32) {
        debug_assert!(self
            .events
            .last()
            .is_none_or(|e| (e.time, e.agent) < (time, agent)));
        self.events.push(Event { time, agent });
        self.counts[agent as usize] += 1;
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Action count `d_i` per agent.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[inline]
fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

fn check_duration(t_g: f64) -> Result<()> {
    if !(t_g.is_finite() && t_g > 0.0) {
        return Err(invalid("t_g", format!("must be finite and > 0, got {t_g}")));
    }
    Ok(())
}

/// One self-exciting generator on `[0, t_g)` starting from an empty history.
pub fn sample_single<R: Rng + ?Sized>(
    params: &KernelParams,
    t_g: f64,
    rng: &mut R,
) -> Result<EventTimeline> {
    check_duration(t_g)?;
    let mut timeline = EventTimeline::new(1);
    let decay = params.decay_rate();
    let jump = params.jump(Excitation::Endo);
    // excitation above baseline, valid at time `t`
    let mut excess = 0.0;
    let mut t = 0.0;
    let mut bound = params.rho;
    loop {
        let wait = exp_draw(rng, bound);
        let next = t + wait;
        if next >= t_g {
            break;
        }
        excess *= (-decay * wait).exp();
        let lambda = params.rho + excess;
        let u: f64 = rng.random();
        t = next;
        if u * bound < lambda {
            timeline.push(t, 0);
            excess += jump;
            bound = lambda + jump;
        } else {
            bound = lambda;
        }
    }
    Ok(timeline)
}

/// Min-heap of agents keyed by candidate time, with position tracking so a
/// key can be changed in place. Ties order by agent index.
#[derive(Clone, Debug)]
pub struct CandidateQueue {
    heap: Vec<u32>,
    pos: Vec<u32>,
    keys: Vec<f64>,
}

const ABSENT: u32 = u32::MAX;

impl CandidateQueue {
    pub fn new(agents: usize) -> Self {
        Self {
            heap: Vec::with_capacity(agents),
            pos: vec![ABSENT; agents],
            keys: vec![f64::INFINITY; agents],
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.pos[agent] != ABSENT
    }

    pub fn key(&self, agent: usize) -> Option<f64> {
        self.contains(agent).then(|| self.keys[agent])
    }

    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap
            .first()
            .map(|&a| (a as usize, self.keys[a as usize]))
    }

    /// Inserts `agent` or moves its existing entry to `key`. An infinite key
    /// removes it.
    pub fn set(&mut self, agent: usize, key: f64) {
        if key == f64::INFINITY {
            self.remove(agent);
            return;
        }
        let old = self.keys[agent];
        self.keys[agent] = key;
        if self.pos[agent] == ABSENT {
            self.pos[agent] = self.heap.len() as u32;
            self.heap.push(agent as u32);
            self.sift_up(self.heap.len() - 1);
        } else {
            let at = self.pos[agent] as usize;
            if (key, agent) < (old, agent) {
                self.sift_up(at);
            } else {
                self.sift_down(at);
            }
        }
    }

    pub fn remove(&mut self, agent: usize) {
        let at = self.pos[agent];
        if at == ABSENT {
            return;
        }
        let at = at as usize;
        let last = self.heap.len() - 1;
        self.swap(at, last);
        self.heap.pop();
        self.pos[agent] = ABSENT;
        self.keys[agent] = f64::INFINITY;
        if at < self.heap.len() {
            self.sift_down(at);
            self.sift_up(at);
        }
    }

    pub fn clear(&mut self) {
        for &a in &self.heap {
            self.pos[a as usize] = ABSENT;
            self.keys[a as usize] = f64::INFINITY;
        }
        self.heap.clear();
    }

    #[inline]
    fn less(&self, a: usize, b: usize) -> bool {
        let (x, y) = (self.heap[a], self.heap[b]);
        (self.keys[x as usize], x) < (self.keys[y as usize], y)
    }

    #[inline]
    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a] as usize] = a as u32;
        self.pos[self.heap[b] as usize] = b as u32;
    }

    fn sift_up(&mut self, mut at: usize) {
        while at > 0 {
            let parent = (at - 1) / 2;
            if !self.less(at, parent) {
                break;
            }
            self.swap(at, parent);
            at = parent;
        }
    }

    fn sift_down(&mut self, mut at: usize) {
        let n = self.heap.len();
        loop {
            let left = 2 * at + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && self.less(right, left) {
                right
            } else {
                left
            };
            if !self.less(child, at) {
                break;
            }
            self.swap(at, child);
            at = child;
        }
    }
}

/// Multivariate thinning sampler over a lattice. The process state (decayed
/// excitation and pending candidates) persists across calls to
/// [`LatticeSampler::run_window`], so consecutive windows form one
/// continuous realisation.
#[derive(Clone, Debug)]
pub struct LatticeSampler {
    params: KernelParams,
    endo: Vec<f64>,
    exo: Vec<f64>,
    stamp: Vec<f64>,
    bound: Vec<f64>,
    queue: CandidateQueue,
    clock: f64,
}

impl LatticeSampler {
    /// Empty history at time zero. Fails if the excitation is not
    /// stationary on `lattice`.
    pub fn new<R: Rng + ?Sized>(
        params: KernelParams,
        lattice: &Lattice,
        rng: &mut R,
    ) -> Result<Self> {
        params.check_stationary(lattice.k())?;
        let n = lattice.len();
        let mut sampler = Self {
            params,
            endo: vec![0.0; n],
            exo: vec![0.0; n],
            stamp: vec![0.0; n],
            bound: vec![0.0; n],
            queue: CandidateQueue::new(n),
            clock: 0.0,
        };
        sampler.reset(rng);
        Ok(sampler)
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Forgets all history; the process restarts from baseline at the
    /// current clock.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let now = self.clock;
        self.queue.clear();
        for i in 0..self.endo.len() {
            self.endo[i] = 0.0;
            self.exo[i] = 0.0;
            self.stamp[i] = now;
            self.redraw(i, now, self.params.rho, rng);
        }
    }

    /// Intensity of agent `i` at `t`, which must not precede the agent's
    /// last state update.
    pub fn intensity(&self, i: usize, t: f64) -> f64 {
        debug_assert!(t >= self.stamp[i]);
        let f = (-self.params.decay_rate() * (t - self.stamp[i])).exp();
        self.params.rho + (self.endo[i] + self.exo[i]) * f
    }

    /// Decayed `(endo, exo)` excitation of agent `i` at its last update.
    pub fn excitation(&self, i: usize) -> (f64, f64) {
        (self.endo[i], self.exo[i])
    }

    /// Pending candidate time of agent `i`, if any.
    pub fn candidate(&self, i: usize) -> Option<f64> {
        self.queue.key(i)
    }

    /// Simulates `duration` time units without recording anything.
    pub fn advance<R: Rng + ?Sized>(&mut self, lattice: &Lattice, duration: f64, rng: &mut R) {
        let end = self.clock + duration;
        self.drive(lattice, end, rng, |_, _| {});
    }

    /// Burn-in long enough for the mean intensity to reach its stationary
    /// value.
    pub fn warm_up<R: Rng + ?Sized>(&mut self, lattice: &Lattice, rng: &mut R) {
        let duration = default_warmup(&self.params, lattice.k());
        if duration > 0.0 {
            self.advance(lattice, duration, rng);
        }
    }

    /// Runs `[clock, clock + t_g)` and writes the events, with times
    /// relative to the window start, into `timeline`.
    pub fn run_window<R: Rng + ?Sized>(
        &mut self,
        lattice: &Lattice,
        t_g: f64,
        rng: &mut R,
        timeline: &mut EventTimeline,
    ) {
        timeline.clear(lattice.len());
        let start = self.clock;
        let end = start + t_g;
        self.drive(lattice, end, rng, |t, agent| {
            timeline.push(t - start, agent as u32)
        });
    }

    fn drive<R: Rng + ?Sized>(
        &mut self,
        lattice: &Lattice,
        end: f64,
        rng: &mut R,
        mut on_event: impl FnMut(f64, usize),
    ) {
        let decay = self.params.decay_rate();
        let endo_jump = self.params.jump(Excitation::Endo);
        let exo_jump = self.params.jump(Excitation::Exo);
        while let Some((i, t)) = self.queue.peek() {
            if t >= end {
                break;
            }
            let f = (-decay * (t - self.stamp[i])).exp();
            self.endo[i] *= f;
            self.exo[i] *= f;
            self.stamp[i] = t;
            let lambda = self.params.rho + self.endo[i] + self.exo[i];
            let u: f64 = rng.random();
            if u * self.bound[i] < lambda {
                on_event(t, i);
                self.endo[i] += endo_jump;
                self.redraw(i, t, lambda + endo_jump, rng);
                if exo_jump > 0.0 {
                    for &j in lattice.neighbors(i) {
                        let j = j as usize;
                        let f = (-decay * (t - self.stamp[j])).exp();
                        self.endo[j] *= f;
                        self.exo[j] = self.exo[j] * f + exo_jump;
                        self.stamp[j] = t;
                        let lj = self.params.rho + self.endo[j] + self.exo[j];
                        self.redraw(j, t, lj, rng);
                    }
                }
            } else {
                self.redraw(i, t, lambda, rng);
            }
        }
        self.clock = end;
    }

    #[inline]
    fn redraw<R: Rng + ?Sized>(&mut self, i: usize, now: f64, bound: f64, rng: &mut R) {
        self.bound[i] = bound;
        self.queue.set(i, now + exp_draw(rng, bound));
    }
}

/// Burn-in duration used by [`LatticeSampler::warm_up`].
pub fn default_warmup(params: &KernelParams, k: usize) -> f64 {
    if params.is_poisson() {
        return 0.0;
    }
    params
        .relaxation_time(k)
        .map(|tau| WARMUP_RELAXATIONS * tau)
        .unwrap_or(0.0)
}

/// Joint timeline of every agent over one window of length `t_g`, taken
/// from the stationary regime (the sampler is warmed up first).
pub fn sample_lattice<R: Rng + ?Sized>(
    params: &KernelParams,
    lattice: &Lattice,
    t_g: f64,
    rng: &mut R,
) -> Result<EventTimeline> {
    check_duration(t_g)?;
    let mut sampler = LatticeSampler::new(*params, lattice, rng)?;
    sampler.warm_up(lattice, rng);
    let mut timeline = EventTimeline::new(lattice.len());
    sampler.run_window(lattice, t_g, rng, &mut timeline);
    Ok(timeline)
}
