//! Grand-canonical trap model on a Poisson point process of energies.
//!
//! Energies above a threshold `E < 0` form a Poisson process of intensity
//! `α e^{−αε} dε`, so their number `N_E` is Poisson with mean `e^{−αE}` and
//! each is `E` plus an `Exp(α)` excess. Rates are measured in units of `τ₀`:
//! `x_i = τ₀ e^{−E_i}`. Fixed `τ₀` relaxes to equilibrium, `τ₀ = e^{E}`
//! recovers the canonical model, and `τ₀ → 0` gives pure ageing.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::correlation::{aging_function, pi_laplace, pi_spectral, CorrelationQuery};
use crate::error::{Error, Result};
use crate::landscape::{check_alpha, draw_separated_energies, EnergyLandscape};
use crate::montecarlo::{window_estimates, window_samples, DeepSet, McConfig};
use crate::numeric::{fmt_f64, CompensatedSum, ComplexSum};
use crate::quadrature::{
    contour_integrate, default_left_margin, truncation_bound, truncation_for_tolerance, ContourKind, ContourSpec,
};
use crate::rng::stream_rng;
use crate::spectral::{compute_spectrum, SpectralDecomposition};

/// Largest admissible mean point count.
pub const MAX_MEAN_COUNT: f64 = 5e7;

/// Largest share of `Σ τ_i` allowed below the threshold for stationary limits.
pub const STATIONARY_TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PppConfig {
    pub alpha: f64,
    /// Energy threshold `E < 0`.
    pub threshold: f64,
    pub tau0: f64,
    pub seed: u64,
}

impl PppConfig {
    pub fn new(alpha: f64, threshold: f64, tau0: f64, seed: u64) -> Self {
        Self { alpha, threshold, tau0, seed }
    }

    /// Time unit given through its energy, `τ₀ = e^{E₀}`.
    pub fn with_time_energy(alpha: f64, threshold: f64, e0: f64, seed: u64) -> Self {
        Self::new(alpha, threshold, e0.exp(), seed)
    }

    pub fn mean_count(&self) -> f64 {
        (-self.alpha * self.threshold).exp()
    }

    /// Largest possible rate `τ₀ e^{−E}`.
    pub fn rate_bound(&self) -> f64 {
        self.tau0 * (-self.threshold).exp()
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.threshold < 0.0 && self.threshold.is_finite()) {
            return Err(Error::invalid("threshold energy must be negative and finite"));
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::invalid("tau0 must be positive and finite"));
        }
        if self.mean_count() > MAX_MEAN_COUNT {
            return Err(Error::invalid(format!("mean point count {:e} exceeds {MAX_MEAN_COUNT:e}", self.mean_count())));
        }
        Ok(())
    }
}

/// One realization of the point process.
#[derive(Debug, Clone, PartialEq)]
pub struct PppSample {
    pub config: PppConfig,
    /// `E_i ≥ E`, sorted decreasing (so rates increase).
    pub energies: Vec<f64>,
    /// `x_i = τ₀ e^{−E_i}`, sorted increasing.
    pub rates: Vec<f64>,
}

impl PppSample {
    pub fn count(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn landscape(&self) -> Result<EnergyLandscape> {
        EnergyLandscape::from_rates(self.rates.clone())
    }

    /// `Σ_i τ_i` with `τ_i = 1/x_i`.
    pub fn total_waiting_time(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for x in self.rates.iter().rev() {
            s.add(1.0 / x);
        }
        s.value()
    }

    /// Expected `Σ τ_i` over energies below the threshold, relative to the
    /// sampled total: `α e^{(1−α)E}/((1−α)τ₀) / Σ_i τ_i`.
    pub fn missing_tail_fraction(&self) -> f64 {
        let c = &self.config;
        let missing = c.alpha * ((1.0 - c.alpha) * c.threshold).exp() / ((1.0 - c.alpha) * c.tau0);
        missing / self.total_waiting_time()
    }
}

fn build_sample(cfg: &PppConfig, count: usize, rng: &mut crate::rng::StreamRng) -> Result<PppSample> {
    let exp = Exp::new(cfg.alpha).map_err(|e| Error::invalid(e.to_string()))?;
    let (excess, rates) = draw_separated_energies(rng, &exp, count, cfg.rate_bound())?;
    let energies = excess.iter().map(|e| cfg.threshold + e).collect();
    Ok(PppSample { config: *cfg, energies, rates: rates.into_iter().collect() })
}

/// Draws `N_E ~ Poisson(e^{−αE})` and then the points, from stream `(seed, 0)`.
pub fn sample_ppp(cfg: &PppConfig) -> Result<PppSample> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let poisson = Poisson::new(cfg.mean_count()).map_err(|e| Error::invalid(e.to_string()))?;
    let count = poisson.sample(&mut rng) as usize;
    build_sample(cfg, count, &mut rng)
}

/// The process conditioned on `N_E = count`. It shares its stream with the
/// canonical sampler, so for `τ₀ = e^{E}` it reproduces the canonical
/// landscape of the same seed.
pub fn sample_ppp_conditioned(cfg: &PppConfig, count: usize) -> Result<PppSample> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    build_sample(cfg, count, &mut rng)
}

/// `a ↦ τ₀^α·#{λ_k ≤ a}` for the spectrum of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledSpectralMeasure {
    pub alpha: f64,
    pub tau0: f64,
    pub spectrum: SpectralDecomposition,
}

impl RescaledSpectralMeasure {
    pub fn count_below(&self, a: f64) -> f64 {
        let k = self.spectrum.eigenvalues().partition_point(|l| *l <= a);
        self.tau0.powf(self.alpha) * k as f64
    }

    /// Largest `|τ₀^α #{λ ≤ a} − a^α|` over `grid`.
    pub fn max_deviation(&self, grid: &[f64]) -> f64 {
        grid.iter().map(|a| (self.count_below(*a) - a.powf(self.alpha)).abs()).fold(0.0, f64::max)
    }
}

pub fn rescaled_spectral_measure(sample: &PppSample, tol: f64) -> Result<RescaledSpectralMeasure> {
    if sample.is_empty() {
        return Err(Error::invalid("the sample has no points"));
    }
    let spectrum = compute_spectrum(&sample.landscape()?, tol)?;
    Ok(RescaledSpectralMeasure { alpha: sample.config.alpha, tau0: sample.config.tau0, spectrum })
}

/// Rescaled counts at each point of `grid`, averaged over `samples`
/// independent landscapes drawn with seeds `cfg.seed..cfg.seed + samples`.
pub fn mean_rescaled_counts(cfg: &PppConfig, samples: u64, grid: &[f64], tol: f64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let per_seed: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let sample = sample_ppp(&PppConfig { seed: cfg.seed.wrapping_add(k), ..*cfg })?;
            let m = rescaled_spectral_measure(&sample, tol)?;
            Ok(grid.iter().map(|a| m.count_below(*a)).collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..grid.len())
        .map(|i| per_seed.iter().map(|row| row[i]).sum::<f64>() / samples as f64)
        .collect())
}

/// `Σ_i τ_i e^{−x_i t} / Σ_i τ_i`, the `t_w → ∞` limit at fixed `τ₀`.
///
/// Fails when the threshold leaves more than `1e−6` of `Σ τ_i` unsampled.
pub fn stationary_limit_pi(sample: &PppSample, t: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("the sample has no points"));
    }
    let fraction = sample.missing_tail_fraction();
    if !(fraction < STATIONARY_TAIL_LIMIT) {
        return Err(Error::TruncationTail { fraction, limit: STATIONARY_TAIL_LIMIT });
    }
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for x in sample.rates.iter().rev() {
        let tau = 1.0 / x;
        num.add(tau * (-x * t).exp());
        den.add(tau);
    }
    Ok(num.value() / den.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum PppMethod {
    /// Exact spectral sum.
    Spectral { tol: f64 },
    /// Contour truncated at the `M` whose bound `c·M^{α−1} ln M` is below `truncation_tol`.
    Contour { truncation_tol: f64 },
    /// Transform in `t_w` inverted along the folded Bromwich path.
    Laplace { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PppPi {
    pub value: f64,
    /// Truncation bound for the contour method, zero otherwise.
    pub truncation_error: f64,
    pub truncation: f64,
}

/// Root of `Σ_j 1/(x_j − λ)` in `(x[k−1], x[k])` by bisection.
fn bracket_root(rates: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = (rates[k - 1], rates[k]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        let g: f64 = rates.iter().map(|x| 1.0 / (x - mid)).sum();
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rectangle truncated near `m`: its right edge crosses the real axis in the
/// middle of the wider side of the eigenvalue in the rate bracket holding `m`.
fn truncated_contour(rates: &[f64], m: f64, t_w: f64, tol: f64) -> ContourSpec {
    let eps = default_left_margin(&[t_w]);
    let x_max = *rates.last().expect("non-empty");
    let k = rates.partition_point(|x| *x <= m);
    let (crossing, guard) = if k >= rates.len() {
        (x_max + 0.5 * x_max.max(eps), 0.5 * x_max.max(eps))
    } else if k == 0 {
        (0.5 * rates[0], 0.5 * rates[0])
    } else {
        let root = bracket_root(rates, k);
        let (left, right) = (root - rates[k - 1], rates[k] - root);
        if left >= right {
            (rates[k - 1] + 0.5 * left, 0.5 * left)
        } else {
            (root + 0.5 * right, 0.5 * right)
        }
    };
    ContourSpec {
        kind: ContourKind::FiniteRectangle,
        left_margin: eps,
        right_end: crossing,
        half_height: 0.5,
        nodes_per_unit: 4.0,
        truncation: m,
        enclosed_max: crossing - guard,
        tol,
    }
}

/// `Π_E(t, t_w)` on a sample.
pub fn pi_e(sample: &PppSample, q: CorrelationQuery, method: PppMethod) -> Result<PppPi> {
    q.validate()?;
    if sample.is_empty() {
        return Err(Error::invalid("the sample has no points"));
    }
    match method {
        PppMethod::Spectral { tol } => {
            let spectrum = compute_spectrum(&sample.landscape()?, tol)?;
            Ok(PppPi { value: pi_spectral(&spectrum, q)?, truncation_error: 0.0, truncation: f64::INFINITY })
        }
        PppMethod::Laplace { tol } => Ok(PppPi {
            value: pi_laplace(&sample.rates, q.t, q.t_w, tol)?,
            truncation_error: 0.0,
            truncation: f64::INFINITY,
        }),
        PppMethod::Contour { truncation_tol } => {
            let alpha = sample.config.alpha;
            let m = truncation_for_tolerance(alpha, truncation_tol)?;
            let c = truncated_contour(&sample.rates, m, q.t_w, 1e-10);
            let n = sample.count() as f64;
            let factor = (n - 1.0) / n;
            let weights: Vec<f64> = sample.rates.iter().map(|x| (-factor * x * q.t).exp()).collect();
            let rates = &sample.rates;
            let est = contour_integrate(
                |lambda| {
                    let mut num = ComplexSum::new();
                    let mut den = ComplexSum::new();
                    for (x, w) in rates.iter().zip(&weights) {
                        let r = (Complex64::new(*x, 0.0) - lambda).inv();
                        den.add(r);
                        num.add(r * *w);
                    }
                    (-lambda * q.t_w).exp() / lambda * num.value() / den.value()
                },
                &c,
            )?;
            Ok(PppPi { value: est.value.re, truncation_error: truncation_bound(alpha, m), truncation: m })
        }
    }
}

/// The three time-unit regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Fixed `τ₀`: fast relaxation to the stationary limit.
    FixedUnit,
    /// `τ₀ = e^{E}`: the canonical model with a Poisson number of sites.
    Canonical,
    /// Small `τ₀` with a depth cutoff `δ`: windowed correlation by Monte Carlo.
    Windowed,
}

/// Grid for [`regime_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeGrid {
    pub alpha: f64,
    pub seed: u64,
    pub thetas: Vec<f64>,
    pub waiting_times: Vec<f64>,
    /// `(τ₀, E)` for the fixed-unit regime.
    pub fixed_unit: Option<(f64, f64)>,
    /// `E` for the canonical regime (`τ₀ = e^{E}`).
    pub canonical_threshold: Option<f64>,
    /// `(τ₀, E, δ, replicas)` for the windowed regime.
    pub windowed: Option<(f64, f64, f64, usize)>,
    pub tol: f64,
}

/// One output line: `(regime, tau0, E, theta, t_w, quantity, value, err)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub regime: Regime,
    pub tau0: f64,
    pub threshold: f64,
    pub theta: f64,
    pub t_w: f64,
    pub quantity: String,
    pub value: f64,
    pub err: f64,
}

pub const REGIME_CSV_HEADER: &str = "regime,tau0,E,theta,t_w,quantity,value,err";

impl RegimeRow {
    pub fn csv_line(&self) -> String {
        let regime = match self.regime {
            Regime::FixedUnit => "fixed-unit",
            Regime::Canonical => "canonical",
            Regime::Windowed => "windowed",
        };
        format!(
            "{regime},{},{},{},{},{},{},{}",
            fmt_f64(self.tau0),
            fmt_f64(self.threshold),
            fmt_f64(self.theta),
            fmt_f64(self.t_w),
            self.quantity,
            fmt_f64(self.value),
            fmt_f64(self.err)
        )
    }
}

/// Evaluates the curves of every configured regime. Fixed-unit and
/// canonical curves are `Π_E(θt_w, t_w)` (transform route); the windowed
/// regime estimates `Π⁽¹⁾_E(θt_w, t_w)` with the cutoff `δ`. Each row is
/// paired with the limit it should approach (`stationary` or `aging`).
pub fn regime_experiment(grid: &RegimeGrid) -> Result<Vec<RegimeRow>> {
    let mut rows = Vec::new();
    let mut push = |regime, cfg: &PppConfig, theta, t_w, quantity: &str, value, err| {
        rows.push(RegimeRow {
            regime,
            tau0: cfg.tau0,
            threshold: cfg.threshold,
            theta,
            t_w,
            quantity: quantity.to_string(),
            value,
            err,
        })
    };
    if let Some((tau0, threshold)) = grid.fixed_unit {
        let cfg = PppConfig::new(grid.alpha, threshold, tau0, grid.seed);
        let sample = sample_ppp(&cfg)?;
        for &t_w in &grid.waiting_times {
            for &theta in &grid.thetas {
                let t = theta * t_w;
                push(Regime::FixedUnit, &cfg, theta, t_w, "pi", pi_laplace(&sample.rates, t, t_w, grid.tol)?, grid.tol);
                push(Regime::FixedUnit, &cfg, theta, t_w, "stationary", stationary_limit_pi(&sample, t)?, 0.0);
            }
        }
    }
    if let Some(threshold) = grid.canonical_threshold {
        let cfg = PppConfig::new(grid.alpha, threshold, threshold.exp(), grid.seed);
        let sample = sample_ppp(&cfg)?;
        for &t_w in &grid.waiting_times {
            for &theta in &grid.thetas {
                let value = pi_laplace(&sample.rates, theta * t_w, t_w, grid.tol)?;
                push(Regime::Canonical, &cfg, theta, t_w, "pi", value, grid.tol);
                push(Regime::Canonical, &cfg, theta, t_w, "aging", aging_function(grid.alpha, theta)?, 0.0);
            }
        }
    }
    if let Some((tau0, threshold, delta, replicas)) = grid.windowed {
        let cfg = PppConfig::new(grid.alpha, threshold, tau0, grid.seed);
        let sample = sample_ppp(&cfg)?;
        let landscape = sample.landscape()?;
        let deep = DeepSet::new(&landscape, delta);
        let mc = McConfig::new(replicas, grid.seed);
        for &t_w in &grid.waiting_times {
            let t_max = grid.thetas.iter().fold(0.0, |a: f64, b| a.max(*b)) * t_w;
            let samples = window_samples(&landscape, &deep, t_w, t_max, &mc)?;
            for &theta in &grid.thetas {
                let [pi, first, _] = window_estimates(&samples, t_w, theta * t_w);
                push(Regime::Windowed, &cfg, theta, t_w, "pi", pi.estimate, pi.stderr);
                push(Regime::Windowed, &cfg, theta, t_w, "pi_window", first.estimate, first.stderr);
                push(Regime::Windowed, &cfg, theta, t_w, "aging", aging_function(grid.alpha, theta)?, 0.0);
            }
        }
    }
    Ok(rows)
}

pub fn write_regime_csv(rows: &[RegimeRow], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{REGIME_CSV_HEADER}")?;
    for r in rows {
        writeln!(f, "{}", r.csv_line())?;
    }
    f.flush()?;
    Ok(())
}
