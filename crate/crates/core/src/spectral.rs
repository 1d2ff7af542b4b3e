//! Exact spectrum of the generator through its secular equation.
//!
//! Eigenvalue 0 is exactly zero. For `k ≥ 1`, eigenvalue `k` is the unique
//! root of `Σ_j 1/(x_j − λ)` in `(x[k−1], x[k])`. Each root is stored as an
//! anchor (the nearer bracket end) plus an offset, so that the differences
//! `x_j − λ_k` entering eigenvectors and weights keep full relative accuracy
//! even for nearly coincident rates.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landscape::EnergyLandscape;
use crate::numeric::{ks_statistic, ComplexSum, CompensatedSum, DoubleDouble};

/// Brackets narrower than this are solved with double-double sums.
pub const EXTENDED_PRECISION_WIDTH: f64 = 1e-9;

const MAX_ROOT_ITERATIONS: usize = 200;

/// Eigenvalues and spectral weights of one landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    rates: Vec<f64>,
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
    anchors: Vec<f64>,
    offsets: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// The landscape's rates.
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `γ_k = 1/φ′(λ_k)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `x_j − λ_k`, evaluated from the anchored representation.
    #[inline]
    pub fn rate_gap(&self, j: usize, k: usize) -> f64 {
        (self.rates[j] - self.anchors[k]) - self.offsets[k]
    }

    /// `(N−1)/N`.
    pub fn exit_factor(&self) -> f64 {
        let n = self.len() as f64;
        (n - 1.0) / n
    }

    /// `|φ(λ_k)|` evaluated through [`Self::rate_gap`].
    pub fn secular_residual(&self, k: usize) -> f64 {
        let lambda = self.eigenvalues[k];
        let mut s = CompensatedSum::new();
        for j in 0..self.len() {
            s.add(1.0 / self.rate_gap(j, k));
        }
        (lambda * s.value()).abs()
    }

    /// Eigenvector `ψ^(k)_j = x_j/(x_j − λ_k)`.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|j| self.rates[j] / self.rate_gap(j, k)).collect()
    }
}

/// `φ(λ) = Σ_j λ/(x_j − λ)`, compensated.
pub fn secular_phi(landscape: &EnergyLandscape, lambda: Complex64) -> Result<Complex64> {
    let mut sum = ComplexSum::new();
    for &x in landscape.rates() {
        let d = Complex64::new(x - lambda.re, -lambda.im);
        let dist = d.norm();
        if dist < 1e-14 {
            return Err(Error::PoleProximity { pole: x, distance: dist });
        }
        sum.add(lambda / d);
    }
    Ok(sum.value())
}

/// Solves the secular equation bracket by bracket.
///
/// `tol` is the relative accuracy requested for each root's offset from its
/// anchor. Every bracket is refined by a safeguarded rational iteration: a
/// two-pole model of `g` proposes the step, bisection takes over whenever the
/// proposal leaves the current bracket.
pub fn compute_spectrum(landscape: &EnergyLandscape, tol: f64) -> Result<SpectralDecomposition> {
    if landscape.is_empty() {
        return Err(Error::invalid("spectrum of an empty landscape"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let rates = landscape.rates();
    let n = rates.len();
    let roots: Vec<(f64, f64)> = (1..n)
        .into_par_iter()
        .map(|k| solve_bracket(rates, k, tol))
        .collect::<Result<_>>()?;

    let mut anchors = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    anchors.push(0.0);
    offsets.push(0.0);
    for (a, o) in roots {
        anchors.push(a);
        offsets.push(o);
    }
    let eigenvalues: Vec<f64> = anchors.iter().zip(&offsets).map(|(a, o)| a + o).collect();
    for k in 1..n {
        let lam = eigenvalues[k];
        if !(rates[k - 1] < lam && lam < rates[k]) {
            return Err(Error::Bracket { index: k });
        }
    }
    let mut spec = SpectralDecomposition {
        rates: rates.to_vec(),
        eigenvalues,
        weights: Vec::new(),
        anchors,
        offsets,
    };
    spec.weights = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut s = CompensatedSum::new();
            for j in 0..n {
                let d = spec.rate_gap(j, k);
                s.add(spec.rates[j] / (d * d));
            }
            1.0 / s.value()
        })
        .collect();
    Ok(spec)
}

/// Partial sums of `1/δ_j` and `1/δ_j²` split at the bracket.
#[derive(Debug, Clone, Copy, Default)]
struct BracketSums {
    left: f64,
    right: f64,
    left_slope: f64,
    right_slope: f64,
}

fn bracket_sums(rates: &[f64], k: usize, anchor: f64, offset: f64, extended: bool) -> BracketSums {
    let mut s = BracketSums::default();
    if extended {
        let (mut left, mut right) = (DoubleDouble::ZERO, DoubleDouble::ZERO);
        for (j, &x) in rates.iter().enumerate() {
            let r = DoubleDouble::diff(x, anchor).sub_f64(offset).recip();
            let r2 = r.hi * r.hi;
            if j < k {
                left = left.add(r);
                s.left_slope += r2;
            } else {
                right = right.add(r);
                s.right_slope += r2;
            }
        }
        s.left = left.to_f64();
        s.right = right.to_f64();
    } else {
        for &x in &rates[..k] {
            let r = 1.0 / ((x - anchor) - offset);
            s.left += r;
            s.left_slope += r * r;
        }
        for &x in &rates[k..] {
            let r = 1.0 / ((x - anchor) - offset);
            s.right += r;
            s.right_slope += r * r;
        }
    }
    s
}

/// Root in `(x[k−1], x[k])` as `(anchor, offset)`.
fn solve_bracket(rates: &[f64], k: usize, tol: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (rates[k - 1], rates[k]);
    let width = hi - lo;
    let extended = width < EXTENDED_PRECISION_WIDTH;

    let mid = bracket_sums(rates, k, lo, 0.5 * width, extended);
    let g_mid = mid.left + mid.right;
    if !g_mid.is_finite() {
        return Err(Error::Bracket { index: k });
    }
    // g increases across the bracket, so its sign at the midpoint tells which
    // half holds the root; anchor at the end of that half.
    let (anchor, mut a, mut b) =
        if g_mid >= 0.0 { (lo, 0.0, 0.5 * width) } else { (hi, -0.5 * width, 0.0) };
    let mut tau = 0.5 * (a + b);
    let min_step = |t: f64| (tol * t.abs()).max(4.0 * f64::EPSILON * t.abs());

    for _ in 0..MAX_ROOT_ITERATIONS {
        let s = bracket_sums(rates, k, anchor, tau, extended);
        let g = s.left + s.right;
        if g == 0.0 {
            return Ok((anchor, tau));
        }
        if g > 0.0 {
            b = tau;
        } else {
            a = tau;
        }
        let d_left = (lo - anchor) - tau;
        let d_right = (hi - anchor) - tau;
        let step = two_pole_step(&s, d_left, d_right);
        let next = match step {
            Some(eta) if tau + eta > a && tau + eta < b => tau + eta,
            _ => 0.5 * (a + b),
        };
        let moved = (next - tau).abs();
        tau = next;
        if moved <= min_step(tau) || (b - a) <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return Ok((anchor, tau));
        }
    }
    Err(Error::no_convergence("secular root", format!("bracket {k} after {MAX_ROOT_ITERATIONS} iterations")))
}

/// Zero of the model `c + q/(δ_l − η) + Q/(δ_r − η)` that matches value and
/// slope of each side's partial sum at the current point.
fn two_pole_step(s: &BracketSums, d_left: f64, d_right: f64) -> Option<f64> {
    let q = s.left_slope * d_left * d_left;
    let big_q = s.right_slope * d_right * d_right;
    let c = (s.left - s.left_slope * d_left) + (s.right - s.right_slope * d_right);
    let qa = c;
    let qb = -(c * (d_left + d_right) + q + big_q);
    let qc = c * d_left * d_right + q * d_right + big_q * d_left;
    let inside = |eta: f64| eta.is_finite() && eta > d_left && eta < d_right;
    if qa == 0.0 {
        let eta = -qc / qb;
        return inside(eta).then_some(eta);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if !(disc >= 0.0) {
        return None;
    }
    let sq = disc.sqrt();
    let t = -0.5 * (qb + qb.signum() * sq);
    [t / qa, qc / t].into_iter().find(|&eta| inside(eta))
}

/// Eigenvector `k` (zero-based) of the landscape's generator.
pub fn eigenvector(spectrum: &SpectralDecomposition, k: usize) -> Result<Vec<f64>> {
    if k >= spectrum.len() {
        return Err(Error::invalid(format!("eigenvector index {k} out of range")));
    }
    Ok(spectrum.eigenvector(k))
}

/// KS distance between the eigenvalues' empirical CDF and `x ↦ x^α` on `[0, 1]`.
pub fn spectral_cdf_distance(spectrum: &SpectralDecomposition, alpha: f64) -> f64 {
    ks_statistic(spectrum.eigenvalues(), |x| x.clamp(0.0, 1.0).powf(alpha))
}

/// `⟨u, v⟩_μ = Σ_i μ(i) u_i v_i` with `μ(i) = 1/x_i`.
pub fn mu_inner(rates: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for i in 0..rates.len() {
        s.add(u[i] * v[i] / rates[i]);
    }
    s.value()
}

/// Largest normalized off-diagonal μ-inner product between eigenvectors.
pub fn orthogonality_residual(spectrum: &SpectralDecomposition) -> f64 {
    let n = spectrum.len();
    let vecs: Vec<Vec<f64>> = (0..n).map(|k| spectrum.eigenvector(k)).collect();
    let norms: Vec<f64> = vecs.iter().map(|v| mu_inner(spectrum.rates(), v, v).sqrt()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let ip = mu_inner(spectrum.rates(), &vecs[i], &vecs[j]);
            worst = worst.max(ip.abs() / (norms[i] * norms[j]));
        }
    }
    worst
}

/// Positions and signs of the two largest-magnitude entries of one eigenvector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakPair {
    pub eigen_index: usize,
    pub first: (usize, f64),
    pub second: (usize, f64),
}

impl PeakPair {
    pub fn opposite_signs(&self) -> bool {
        self.first.1.signum() != self.second.1.signum()
    }
}

/// Comparison of the exact spectrum with second-order perturbation theory
/// around the diagonal part of the generator, at coupling `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub first_order: Vec<f64>,
    pub second_order: Vec<f64>,
    /// `x_k − x_k/N + λ_k^(2)/N²`.
    pub perturbed: Vec<f64>,
    pub min_gap: f64,
    pub half_spread: f64,
    pub mean_rate: f64,
    /// Whether the mean rate is at most the minimum gap.
    pub condition_satisfied: bool,
    /// `max_k |perturbed_k − λ_k| / x_k`.
    pub max_relative_error: f64,
    pub peaks: Vec<PeakPair>,
}

pub fn perturbation_report(
    landscape: &EnergyLandscape,
    spectrum: &SpectralDecomposition,
) -> Result<PerturbationReport> {
    let x = landscape.rates();
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("perturbation report needs at least two sites"));
    }
    let z = 1.0 / n as f64;
    let mu: Vec<f64> = x.iter().map(|v| 1.0 / v).collect();
    // T^(1) has every entry of row i equal to −x_i, so T^(1)e_k = −x.
    let first_order: Vec<f64> = (0..n)
        .map(|k| {
            let num = mu[k] * (-x[k]);
            let den = mu[k];
            num / den
        })
        .collect();
    let second_order: Vec<f64> = (0..n)
        .map(|k| {
            let mut s = CompensatedSum::new();
            for j in (0..n).filter(|&j| j != k) {
                let coupling = mu[j] * (-x[j]);
                s.add(coupling * coupling / (mu[k] * mu[j] * (x[k] - x[j])));
            }
            s.value()
        })
        .collect();
    let perturbed: Vec<f64> =
        (0..n).map(|k| x[k] + z * first_order[k] + z * z * second_order[k]).collect();
    let total: f64 = x.iter().sum();
    let mean_rate = total / n as f64;
    let min_gap = landscape.min_gap();
    let max_relative_error = (0..n)
        .map(|k| (perturbed[k] - spectrum.eigenvalues()[k]).abs() / x[k])
        .fold(0.0, f64::max);
    let peaks = (1..n)
        .map(|k| {
            let v = spectrum.eigenvector(k);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
            PeakPair { eigen_index: k, first: (order[0], v[order[0]]), second: (order[1], v[order[1]]) }
        })
        .collect();
    Ok(PerturbationReport {
        first_order,
        second_order,
        perturbed,
        min_gap,
        half_spread: total / 2.0,
        mean_rate,
        condition_satisfied: mean_rate <= min_gap,
        max_relative_error,
        peaks,
    })
}
