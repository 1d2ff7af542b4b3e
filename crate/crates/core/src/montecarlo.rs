//! Event-driven simulation of the walker and Monte Carlo estimators.
//!
//! The walker starts uniformly, holds at `i` for an exponential time of rate
//! `((N−1)/N)x_i` and then jumps to one of the other `N − 1` sites uniformly.
//! Replica `r` draws from stream `(seed, r)`, and replicas are reduced in
//! index order, so results do not depend on the thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationQuery;
use crate::error::{Error, Result};
use crate::landscape::EnergyLandscape;
use crate::numeric::mean_and_stderr;
use crate::rng::{open_unit, stream_rng, StreamRng};

pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replicas: usize,
    pub seed: u64,
    /// Longest simulated time; estimators raise it to what their query needs.
    pub horizon: f64,
    pub max_events: u64,
}

impl McConfig {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self { replicas, seed, horizon: f64::INFINITY, max_events: DEFAULT_MAX_EVENTS }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::invalid("at least one replica is required"));
        }
        if !(self.horizon >= 0.0) {
            return Err(Error::invalid("horizon must be non-negative"));
        }
        Ok(())
    }
}

/// A sample mean over replicas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub replicas: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let (estimate, stderr) = mean_and_stderr(samples);
        Self { estimate, stderr, replicas: samples.len() }
    }
}

/// Sites with rate at least `delta`: the shallow traps the walker leaves quickly.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepSet {
    pub delta: f64,
    pub members: std::ops::Range<usize>,
}

impl DeepSet {
    pub fn new(landscape: &EnergyLandscape, delta: f64) -> Self {
        Self { delta, members: landscape.shallow_sites(delta) }
    }

    #[inline]
    pub fn contains(&self, site: usize) -> bool {
        self.members.contains(&site)
    }
}

/// One realized path up to its horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: usize,
    pub jump_times: Vec<f64>,
    /// Site entered at the matching jump time.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl Trajectory {
    /// The site occupied at time `t`.
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|s| *s <= t);
        if k == 0 {
            self.initial
        } else {
            self.states[k - 1]
        }
    }
}

struct Walker<'a> {
    rates: &'a [f64],
    factor: f64,
    state: usize,
    next_jump: f64,
    rng: StreamRng,
    events: u64,
    max_events: u64,
}

impl<'a> Walker<'a> {
    fn start(landscape: &'a EnergyLandscape, seed: u64, stream: u64, max_events: u64) -> Self {
        let mut rng = stream_rng(seed, stream);
        let n = landscape.len();
        let state = rng.random_range(0..n);
        let mut w = Walker {
            rates: landscape.rates(),
            factor: landscape.exit_factor(),
            state,
            next_jump: 0.0,
            rng,
            events: 0,
            max_events,
        };
        w.next_jump = w.holding();
        w
    }

    fn holding(&mut self) -> f64 {
        let rate = self.factor * self.rates[self.state];
        if rate > 0.0 {
            -open_unit(&mut self.rng).ln() / rate
        } else {
            f64::INFINITY
        }
    }

    /// Performs the pending jump and returns the new site.
    fn jump(&mut self) -> Result<usize> {
        self.events += 1;
        if self.events > self.max_events {
            return Err(Error::MaxEvents { limit: self.max_events });
        }
        let n = self.rates.len();
        let mut target = self.rng.random_range(0..n - 1);
        if target >= self.state {
            target += 1;
        }
        self.state = target;
        let now = self.next_jump;
        self.next_jump = now + self.holding();
        Ok(target)
    }

    /// Runs every jump up to and including time `t`.
    fn advance_to(&mut self, t: f64) -> Result<()> {
        while self.next_jump <= t {
            self.jump()?;
        }
        Ok(())
    }
}

fn check_landscape(landscape: &EnergyLandscape) -> Result<()> {
    if landscape.is_empty() {
        Err(Error::invalid("empty landscape"))
    } else {
        Ok(())
    }
}

/// Simulates one path from the uniform start up to `horizon`.
pub fn simulate_path(
    landscape: &EnergyLandscape,
    horizon: f64,
    seed: u64,
    stream: u64,
    max_events: u64,
) -> Result<Trajectory> {
    check_landscape(landscape)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon must be finite and non-negative"));
    }
    let mut w = Walker::start(landscape, seed, stream, max_events);
    let initial = w.state;
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    while w.next_jump <= horizon {
        let time = w.next_jump;
        states.push(w.jump()?);
        jump_times.push(time);
    }
    Ok(Trajectory { initial, jump_times, states, horizon })
}

fn per_replica<T: Send, F>(cfg: &McConfig, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    cfg.validate()?;
    (0..cfg.replicas as u64).into_par_iter().map(f).collect()
}

/// Rao–Blackwellized and plain estimates of `Π_N(t, t_w)` from the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiEstimates {
    /// Average of `e^{−((N−1)/N) x_{Y(t_w)} t}`.
    pub conditional: McEstimate,
    /// Fraction of paths with no jump in `(t_w, t_w + t]`.
    pub indicator: McEstimate,
}

pub fn mc_pi_both(landscape: &EnergyLandscape, q: CorrelationQuery, cfg: &McConfig) -> Result<PiEstimates> {
    check_landscape(landscape)?;
    q.validate()?;
    let pairs = per_replica(cfg, |r| {
        let mut w = Walker::start(landscape, cfg.seed, r, cfg.max_events);
        w.advance_to(q.t_w)?;
        let rb = (-w.factor * w.rates[w.state] * q.t).exp();
        let plain = if w.next_jump > q.t_w + q.t { 1.0 } else { 0.0 };
        Ok((rb, plain))
    })?;
    let (rb, plain): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(PiEstimates { conditional: McEstimate::from_samples(&rb), indicator: McEstimate::from_samples(&plain) })
}

/// `Π_N(t, t_w)`, Rao–Blackwellized over the residual holding time.
pub fn mc_pi(landscape: &EnergyLandscape, q: CorrelationQuery, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_pi_both(landscape, q, cfg)?.conditional)
}

/// First-event times after `t_w` on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    /// First jump after `t_w`.
    pub first_jump: f64,
    /// First jump after `t_w` landing outside `D`.
    pub first_exit: f64,
    /// First jump after `t_w` landing outside `D ∪ {Y(t_w)}`.
    pub first_exit_or_return: f64,
}

/// Per-replica window times, simulated up to `t_w + t_max`.
pub fn window_samples(
    landscape: &EnergyLandscape,
    deep: &DeepSet,
    t_w: f64,
    t_max: f64,
    cfg: &McConfig,
) -> Result<Vec<WindowSample>> {
    check_landscape(landscape)?;
    CorrelationQuery::new(t_max, t_w)?;
    let end = t_w + t_max;
    per_replica(cfg, |r| {
        let mut w = Walker::start(landscape, cfg.seed, r, cfg.max_events);
        w.advance_to(t_w)?;
        let origin = w.state;
        let first_jump = w.next_jump;
        let mut first_exit = f64::INFINITY;
        while w.next_jump <= end {
            let time = w.next_jump;
            let site = w.jump()?;
            if first_exit.is_infinite() && !deep.contains(site) {
                first_exit = time;
            }
            if !deep.contains(site) && site != origin {
                return Ok(WindowSample { first_jump, first_exit, first_exit_or_return: time });
            }
        }
        Ok(WindowSample { first_jump, first_exit, first_exit_or_return: f64::INFINITY })
    })
}

/// `(Π, Π⁽¹⁾, Π⁽²⁾)` at `t` from shared window samples; ordered on every path.
pub fn window_estimates(samples: &[WindowSample], t_w: f64, t: f64) -> [McEstimate; 3] {
    let end = t_w + t;
    let ind = |f: fn(&WindowSample) -> f64| -> McEstimate {
        let v: Vec<f64> = samples.iter().map(|s| if f(s) > end { 1.0 } else { 0.0 }).collect();
        McEstimate::from_samples(&v)
    };
    [ind(|s| s.first_jump), ind(|s| s.first_exit), ind(|s| s.first_exit_or_return)]
}

/// Which windowed correlation to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowVariant {
    /// Every jump in the window lands in `D`.
    First,
    /// Every jump in the window lands in `D ∪ {Y(t_w)}`.
    Second,
}

pub fn mc_pi_window(
    landscape: &EnergyLandscape,
    delta: f64,
    q: CorrelationQuery,
    variant: WindowVariant,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let deep = DeepSet::new(landscape, delta);
    let samples = window_samples(landscape, &deep, q.t_w, q.t, cfg)?;
    let [_, first, second] = window_estimates(&samples, q.t_w, q.t);
    Ok(match variant {
        WindowVariant::First => first,
        WindowVariant::Second => second,
    })
}

/// Sites occupied at each of `times` (sorted) on every replica.
pub fn occupied_sites(landscape: &EnergyLandscape, times: &[f64], cfg: &McConfig) -> Result<Vec<Vec<usize>>> {
    check_landscape(landscape)?;
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid("times must be sorted, finite and non-negative"));
    }
    per_replica(cfg, |r| {
        let mut w = Walker::start(landscape, cfg.seed, r, cfg.max_events);
        times
            .iter()
            .map(|&t| {
                w.advance_to(t)?;
                Ok(w.state)
            })
            .collect()
    })
}

/// `P_N(x(t) ≥ δ)`.
pub fn mc_deep_trap(landscape: &EnergyLandscape, delta: f64, t: f64, cfg: &McConfig) -> Result<McEstimate> {
    Ok(mc_deep_trap_curve(landscape, delta, &[t], cfg)?[0])
}

/// `P_N(x(t) ≥ δ)` along sorted times, sharing paths.
pub fn mc_deep_trap_curve(landscape: &EnergyLandscape, delta: f64, times: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let sites = occupied_sites(landscape, times, cfg)?;
    let rates = landscape.rates();
    Ok((0..times.len())
        .map(|i| {
            let v: Vec<f64> = sites.iter().map(|s| if rates[s[i]] >= delta { 1.0 } else { 0.0 }).collect();
            McEstimate::from_samples(&v)
        })
        .collect())
}

/// Samples of `t·x(t)`, one per replica.
pub fn mc_scaled_depth(landscape: &EnergyLandscape, t: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    let sites = occupied_sites(landscape, &[t], cfg)?;
    Ok(sites.iter().map(|s| t * landscape.rates()[s[0]]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{expect_h_spectral, pi_spectral};
    use crate::landscape::{sample_landscape, LandscapeConfig};
    use crate::observable::AtLeast;
    use crate::spectral::compute_spectrum;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn small() -> EnergyLandscape {
        EnergyLandscape::from_rates(vec![0.1, 0.3, 0.5, 0.8, 1.0]).unwrap()
    }

    #[test]
    fn zero_horizon_has_no_jumps() {
        let p = simulate_path(&small(), 0.0, 1, 0, 10).unwrap();
        assert!(p.jump_times.is_empty());
        assert_eq!(p.state_at(5.0), p.initial);
    }

    #[test]
    fn path_invariants() {
        let p = simulate_path(&small(), 500.0, 2, 0, 1_000_000).unwrap();
        assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
        let mut prev = p.initial;
        for s in &p.states {
            assert_ne!(*s, prev);
            prev = *s;
        }
        assert!(matches!(simulate_path(&small(), 500.0, 2, 0, 3), Err(Error::MaxEvents { limit: 3 })));
    }

    #[test]
    fn holding_times_and_targets() {
        let l = small();
        let p = simulate_path(&l, 2.0e5, 9, 0, 10_000_000).unwrap();
        let n = l.len();
        let mut sums = vec![0.0; n];
        let mut visits = vec![0usize; n];
        let mut counts = vec![vec![0usize; n]; n];
        let mut from = p.initial;
        let mut since = 0.0;
        for (t, s) in p.jump_times.iter().zip(&p.states) {
            sums[from] += t - since;
            visits[from] += 1;
            counts[from][*s] += 1;
            since = *t;
            from = *s;
        }
        for i in 0..n {
            let mean_hold = n as f64 / (n as f64 - 1.0) / l.rates()[i];
            let sigma = mean_hold / (visits[i] as f64).sqrt();
            assert!((sums[i] / visits[i] as f64 - mean_hold).abs() < 3.5 * sigma, "site {i}");
            let total: usize = counts[i].iter().sum();
            let expected = total as f64 / (n - 1) as f64;
            let chi: f64 = (0..n).filter(|j| *j != i).map(|j| (counts[i][j] as f64 - expected).powi(2) / expected).sum();
            let p_value = 1.0 - ChiSquared::new((n - 2) as f64).unwrap().cdf(chi);
            assert!(p_value > 1e-3, "site {i}: p = {p_value}");
        }
    }

    #[test]
    fn pi_estimators() {
        let l = sample_landscape(&LandscapeConfig::new(0.5, 64, 5)).unwrap();
        let s = compute_spectrum(&l, 1e-15).unwrap();
        let cfg = McConfig::new(10_000, 77);
        let zero = mc_pi(&l, CorrelationQuery::new(0.0, 10.0).unwrap(), &cfg).unwrap();
        assert_eq!((zero.estimate, zero.stderr), (1.0, 0.0));
        let q = CorrelationQuery::from_ratio(1.0, 10.0).unwrap();
        let both = mc_pi_both(&l, q, &cfg).unwrap();
        let exact = pi_spectral(&s, q).unwrap();
        assert!((both.conditional.estimate - exact).abs() < 3.0 * both.conditional.stderr);
        assert!(both.conditional.stderr <= both.indicator.stderr);
    }

    #[test]
    fn window_limits_and_ordering() {
        let l = sample_landscape(&LandscapeConfig::new(0.5, 200, 3)).unwrap();
        let cfg = McConfig::new(2000, 4);
        let q = CorrelationQuery::new(20.0, 10.0).unwrap();
        let all = mc_pi_window(&l, 0.0, q, WindowVariant::First, &cfg).unwrap();
        assert_eq!(all.estimate, 1.0);
        let none = mc_pi_window(&l, 2.0, q, WindowVariant::First, &cfg).unwrap();
        let pi = mc_pi(&l, q, &cfg).unwrap();
        assert!((none.estimate - pi.estimate).abs() < 3.0 * (none.stderr + pi.stderr));
        let deep = DeepSet::new(&l, 0.1);
        let samples = window_samples(&l, &deep, 10.0, 50.0, &cfg).unwrap();
        for t in [1.0, 10.0, 50.0] {
            let [a, b, c] = window_estimates(&samples, 10.0, t);
            assert!(a.estimate <= b.estimate && b.estimate <= c.estimate);
        }
    }

    #[test]
    fn deep_trap_estimates() {
        let l = sample_landscape(&LandscapeConfig::new(0.5, 64, 8)).unwrap();
        let s = compute_spectrum(&l, 1e-15).unwrap();
        let cfg = McConfig::new(10_000, 1);
        let start = mc_deep_trap(&l, 0.25, 0.0, &cfg).unwrap();
        let frac = l.shallow_sites(0.25).len() as f64 / 64.0;
        assert!((start.estimate - frac).abs() < 3.0 * start.stderr);
        let later = mc_deep_trap(&l, 0.25, 30.0, &cfg).unwrap();
        let exact = expect_h_spectral(&s, &AtLeast(0.25), 30.0).unwrap();
        assert!((later.estimate - exact).abs() < 3.0 * later.stderr);
    }

    #[test]
    fn scaled_depth_samples() {
        let single = EnergyLandscape::from_rates(vec![0.4]).unwrap();
        let v = mc_scaled_depth(&single, 10.0, &McConfig::new(5, 1)).unwrap();
        assert!(v.iter().all(|z| *z == 4.0));
        let l = small();
        let a = mc_scaled_depth(&l, 3.0, &McConfig::new(50, 2)).unwrap();
        let b = mc_scaled_depth(&l, 3.0, &McConfig::new(50, 2)).unwrap();
        assert_eq!(a, b);
    }
}
