use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_grid, median};

/// Rays and radii on which `Ĝ` is probed near the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorGrid {
    pub angles: Vec<f64>,
    pub r_max: f64,
    pub r_min: f64,
    pub per_decade: usize,
    /// Radii for the large-`ω` decay estimate.
    pub far_radii: Vec<f64>,
}

impl Default for SectorGrid {
    fn default() -> Self {
        Self {
            angles: vec![0.0, 0.5 * PI, -0.5 * PI, 0.75 * PI, -0.75 * PI],
            r_max: 1.0,
            r_min: 1e-4,
            per_decade: 4,
            far_radii: vec![1e1, 1e2, 1e3],
        }
    }
}

impl SectorGrid {
    pub fn radii(&self) -> Vec<f64> {
        let decades = (self.r_max / self.r_min).log10();
        let count = (decades * self.per_decade as f64).round() as usize + 1;
        log_grid(self.r_max, self.r_min, count.max(3))
    }
}

/// Exponents and constant describing `Ĝ` near zero and at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauberianProbe {
    pub beta: f64,
    pub b: f64,
    /// Large-`ω` decay exponent of `|Ĝ|`.
    pub gamma: f64,
    /// Exponent of the leading correction `ω^β Ĝ − B ~ ω^a`.
    pub correction_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayFit {
    pub angle: f64,
    pub b_re: f64,
    pub b_im: f64,
    pub correction_exponent: f64,
    /// `|ω^β Ĝ − B|` at the smallest radius.
    pub last_deviation: f64,
    pub samples: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberianFit {
    pub probe: TauberianProbe,
    pub rays: Vec<RayFit>,
    /// Largest distance between a ray's constant and the consensus value.
    pub spread: f64,
}

/// Time-domain constant `B/Γ(β)`.
pub fn time_domain_limit(probe: &TauberianProbe) -> f64 {
    probe.b / statrs::function::gamma::gamma(probe.beta)
}

fn fit_ray<F: Fn(Complex64) -> Result<Complex64>>(
    g_hat: &F,
    beta: f64,
    angle: f64,
    radii: &[f64],
) -> Result<RayFit> {
    let mut d = Vec::with_capacity(radii.len());
    let mut samples = Vec::with_capacity(radii.len());
    for &r in radii {
        let w = Complex64::from_polar(r, angle);
        let v = g_hat(w)? * w.powf(beta);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::DivergentFit(format!("non-finite transform at |ω| = {r:e}, angle {angle}")));
        }
        samples.push((r, v.re, v.im));
        d.push(v);
    }
    let n = d.len();
    let q = radii[n - 1] / radii[n - 2];
    let diff_last = d[n - 1] - d[n - 2];
    let diff_prev = d[n - 2] - d[n - 3];
    let scale = d[n - 1].norm().max(1e-300);
    if diff_last.norm() <= 1e-13 * scale {
        return Ok(RayFit {
            angle,
            b_re: d[n - 1].re,
            b_im: d[n - 1].im,
            correction_exponent: f64::INFINITY,
            last_deviation: diff_last.norm(),
            samples,
        });
    }
    let a = (diff_prev.norm() / diff_last.norm()).ln() / (1.0 / q).ln();
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::DivergentFit(format!(
            "ω^β Ĝ(ω) does not settle along angle {angle}: successive changes {:e} then {:e}",
            diff_prev.norm(),
            diff_last.norm()
        )));
    }
    // Geometric tail of the remaining corrections: D Σ_{m≥1} q^{ma}.
    let qa = q.powf(a);
    let b = d[n - 1] + diff_last * (qa / (1.0 - qa));
    Ok(RayFit {
        angle,
        b_re: b.re,
        b_im: b.im,
        correction_exponent: a,
        last_deviation: (d[n - 1] - b).norm(),
        samples,
    })
}

/// Extracts `B` from `ω^β Ĝ(ω)` on several rays toward the origin, checks the
/// rays agree, and estimates the large-`ω` decay exponent.
pub fn tauberian_limit<F: Fn(Complex64) -> Result<Complex64>>(
    g_hat: F,
    beta: f64,
    grid: &SectorGrid,
) -> Result<TauberianFit> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta must be positive"));
    }
    let radii = grid.radii();
    let rays = grid
        .angles
        .iter()
        .map(|&a| fit_ray(&g_hat, beta, a, &radii))
        .collect::<Result<Vec<_>>>()?;
    let re: Vec<f64> = rays.iter().map(|r| r.b_re).collect();
    let b = median(&re);
    let spread = rays
        .iter()
        .map(|r| Complex64::new(r.b_re - b, r.b_im).norm())
        .fold(0.0, f64::max);
    if spread > 0.05 * b.abs() + 1e-12 {
        return Err(Error::DivergentFit(format!("rays disagree on the constant: spread {spread:e} around {b:e}")));
    }
    let exps: Vec<f64> = rays.iter().map(|r| r.correction_exponent).filter(|a| a.is_finite()).collect();
    let correction_exponent = if exps.is_empty() { f64::INFINITY } else { median(&exps) };

    let mut slopes = Vec::new();
    for &angle in &grid.angles {
        let mags = grid
            .far_radii
            .iter()
            .map(|&r| g_hat(Complex64::from_polar(r, angle)).map(|v| v.norm()))
            .collect::<Result<Vec<_>>>()?;
        for w in 0..mags.len().saturating_sub(1) {
            let s = -(mags[w + 1] / mags[w]).ln() / (grid.far_radii[w + 1] / grid.far_radii[w]).ln();
            if s.is_finite() {
                slopes.push(s);
            }
        }
    }
    let gamma = if slopes.is_empty() { f64::NAN } else { slopes.iter().cloned().fold(f64::INFINITY, f64::min) };
    Ok(TauberianFit { probe: TauberianProbe { beta, b, gamma, correction_exponent }, rays, spread })
}
