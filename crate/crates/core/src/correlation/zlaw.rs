use serde::{Deserialize, Serialize};

use super::aging_function;
use crate::error::{Error, Result};
use crate::numeric::mean_and_stderr;

/// Empirical versus limiting Laplace transform of the scaled depth at one `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaDeviation {
    pub theta: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub limit: f64,
}

impl ThetaDeviation {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.limit).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZReport {
    pub per_theta: Vec<ThetaDeviation>,
    pub max_deviation: f64,
    /// Largest `(F(z) − F(y))/(z^α − y^α)` between neighbouring grid points.
    pub holder_constant: f64,
    /// Largest gap between `P(τ(t)/t ≥ u)` and `P(Z ≤ 1/u)` over the `u` grid.
    pub tail_identity_gap: f64,
}

/// Compares samples of `Z = t·x(t)` with the limiting law: `E[e^{−θZ}]`
/// against `A(θ)`, a Hölder estimate of the empirical CDF in `z^α`, and the
/// reciprocal relation between the scaled waiting time and `Z`.
pub fn z_distribution_checks(alpha: f64, samples: &[f64], thetas: &[f64]) -> Result<ZReport> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let mut per_theta = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let values: Vec<f64> = samples.iter().map(|z| (-theta * z).exp()).collect();
        let (empirical, stderr) = mean_and_stderr(&values);
        per_theta.push(ThetaDeviation { theta, empirical, stderr, limit: aging_function(alpha, theta)? });
    }
    let max_deviation = per_theta.iter().map(ThetaDeviation::deviation).fold(0.0, f64::max);

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cdf = |z: f64| sorted.partition_point(|v| *v <= z) as f64 / n;
    let grid: Vec<f64> = (-12..=12).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
    let mut holder_constant: f64 = 0.0;
    let mut prev = 0.0;
    for &z in &grid {
        let jump = cdf(z) - cdf(prev);
        let scale = z.powf(alpha) - prev.powf(alpha);
        if jump > 0.0 {
            holder_constant = holder_constant.max(jump / scale);
        }
        prev = z;
    }

    let mut tail_identity_gap: f64 = 0.0;
    for &u in &grid {
        let p_tau = samples.iter().filter(|z| 1.0 / **z >= u).count() as f64 / n;
        let p_z = samples.iter().filter(|z| **z <= 1.0 / u).count() as f64 / n;
        tail_identity_gap = tail_identity_gap.max((p_tau - p_z).abs());
    }
    Ok(ZReport { per_theta, max_deviation, holder_constant, tail_identity_gap })
}
