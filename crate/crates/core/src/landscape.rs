//! Quenched energy landscapes and the generator of the walk.
//!
//! Energies `E_i ≥ 0` are i.i.d. exponential with parameter `α`, so the rates
//! `x_i = e^{-E_i}` have density `α x^{α-1}` on `(0, 1]`. Sites are stored in
//! increasing order of rate.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, fmt_f64};
use crate::rng::stream_rng;

/// Smallest admissible distance between two rates.
pub const MIN_RATE_GAP: f64 = 1e-12;

/// Resampling rounds allowed before sampling gives up on the gap constraint.
pub const MAX_RESAMPLE_ROUNDS: usize = 100;

/// Dense generator: `((N-1)/N) x_i` on the diagonal, `-x_i/N` elsewhere in row `i`.
pub type GeneratorMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
}

impl LandscapeConfig {
    pub fn new(alpha: f64, n: usize, seed: u64) -> Self {
        Self { alpha, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// A fixed realization of the disorder.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLandscape {
    energies: Vec<f64>,
    rates: Vec<f64>,
    waiting_times: Vec<f64>,
}

impl EnergyLandscape {
    /// Builds a landscape from energies; rates are `e^{-E}`, sites sorted by rate.
    pub fn from_energies(mut energies: Vec<f64>) -> Result<Self> {
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("energies must be finite"));
        }
        energies.sort_by(|a, b| b.total_cmp(a));
        let rates: Vec<f64> = energies.iter().map(|e| (-e).exp()).collect();
        Self::assemble(energies, rates)
    }

    /// Builds a landscape from rates, kept bit-exact; energies are `-ln x`.
    pub fn from_rates(mut rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid("rates must be finite and positive"));
        }
        rates.sort_by(f64::total_cmp);
        let energies = rates.iter().map(|x| -x.ln()).collect();
        Self::assemble(energies, rates)
    }

    fn assemble(energies: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if let Some(x) = rates.first() {
            if !(*x > 0.0) {
                return Err(Error::invalid("rates must be positive"));
            }
        }
        if let Some(w) = rates.windows(2).find(|w| !(w[1] - w[0] > MIN_RATE_GAP)) {
            return Err(Error::invalid(format!(
                "rates {} and {} violate the minimum gap {MIN_RATE_GAP:e}",
                w[0], w[1]
            )));
        }
        let waiting_times = rates.iter().map(|x| 1.0 / x).collect();
        Ok(Self { energies, rates, waiting_times })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Energies, in decreasing order (matching increasing rates).
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Rates `x_i`, strictly increasing.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Waiting times `τ_i = 1/x_i`.
    pub fn waiting_times(&self) -> &[f64] {
        &self.waiting_times
    }

    /// Reversing weight `μ(i) = τ_i`.
    pub fn mu(&self) -> &[f64] {
        &self.waiting_times
    }

    /// Total exit rate `((N-1)/N) x_i` of site `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        let n = self.len() as f64;
        (n - 1.0) / n * self.rates[i]
    }

    /// `(N-1)/N`.
    pub fn exit_factor(&self) -> f64 {
        let n = self.len() as f64;
        (n - 1.0) / n
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.last().copied().unwrap_or(0.0)
    }

    /// Smallest distance between consecutive rates (infinite for `N < 2`).
    pub fn min_gap(&self) -> f64 {
        self.rates.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Indices of sites with rate at least `delta`.
    pub fn shallow_sites(&self, delta: f64) -> std::ops::Range<usize> {
        self.rates.partition_point(|&x| x < delta)..self.len()
    }

    /// Serializable form carrying the sampling parameters.
    pub fn to_document(&self, alpha: f64, seed: u64) -> LandscapeDocument {
        LandscapeDocument { alpha, seed, energies: self.energies.clone() }
    }

    /// Writes `(index, energy, rate, tau)` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "energy", "rate", "tau"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                fmt_f64(self.energies[i]),
                fmt_f64(self.rates[i]),
                fmt_f64(self.waiting_times[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// On-disk landscape `{alpha, seed, energies}`; replaying it rebuilds the
/// identical landscape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeDocument {
    pub alpha: f64,
    pub seed: u64,
    pub energies: Vec<f64>,
}

impl LandscapeDocument {
    pub fn landscape(&self) -> Result<EnergyLandscape> {
        EnergyLandscape::from_energies(self.energies.clone())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Draws a landscape. Sites that collide (gap at most [`MIN_RATE_GAP`]) get
/// fresh energies from the same stream until the gap constraint holds.
pub fn sample_landscape(cfg: &LandscapeConfig) -> Result<EnergyLandscape> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let exp = Exp::new(cfg.alpha).map_err(|e| Error::invalid(e.to_string()))?;
    let (energies, _) = draw_separated_energies(&mut rng, &exp, cfg.n, 1.0)?;
    EnergyLandscape::from_energies(energies)
}

/// `n` energies from `exp`, sorted by decreasing energy, whose rates
/// `scale·e^{−E}` are positive and pairwise more than [`MIN_RATE_GAP`] apart.
pub(crate) fn draw_separated_energies<R: Rng + ?Sized>(
    rng: &mut R,
    exp: &Exp<f64>,
    n: usize,
    scale: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut energies: Vec<f64> = (0..n).map(|_| exp.sample(rng)).collect();
    for _ in 0..=MAX_RESAMPLE_ROUNDS {
        energies.sort_by(|a, b| b.total_cmp(a));
        let rates: Vec<f64> = energies.iter().map(|e| scale * (-e).exp()).collect();
        let mut bad: Vec<usize> = Vec::new();
        if rates.first().is_some_and(|x| *x <= 0.0) {
            bad.push(0);
        }
        for i in 1..rates.len() {
            if rates[i] - rates[i - 1] <= MIN_RATE_GAP && bad.last() != Some(&(i - 1)) {
                bad.push(i);
            }
        }
        if bad.is_empty() {
            return Ok((energies, rates));
        }
        for i in bad {
            energies[i] = exp.sample(rng);
        }
    }
    Err(Error::GapResampling { rounds: MAX_RESAMPLE_ROUNDS })
}

/// The generator matrix.
pub fn build_generator(landscape: &EnergyLandscape) -> GeneratorMatrix {
    let n = landscape.len();
    let nf = n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        let x = landscape.rates()[i];
        if i == j {
            (nf - 1.0) / nf * x
        } else {
            -x / nf
        }
    })
}

/// Equilibrium law `τ_i / Σ_j τ_j`.
pub fn equilibrium_measure(landscape: &EnergyLandscape) -> Vec<f64> {
    let total = compensated_sum(landscape.waiting_times().iter().copied());
    landscape.waiting_times().iter().map(|t| t / total).collect()
}
