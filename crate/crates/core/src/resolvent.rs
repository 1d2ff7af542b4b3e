//! Resolvent calculus for finite reversible chains.
//!
//! For a generator `L` reversible with respect to `μ`, the law at time `t`
//! started from `ν` is
//! `ν_t(j) = (1/2πi)∮ e^{−tλ} Σ_k μ(j) R_{jk}(λ) ν(k)/μ(k) dλ` with
//! `R(λ) = (λI − L)^{−1}`. Dense solves make this a validation tool for
//! `N ≤ 200`; uniformization provides the brute-force reference.

use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::landscape::{build_generator, EnergyLandscape};
use crate::numeric::ComplexSum;
use crate::quadrature::{contour_integrate, ContourSpec};
use crate::rng::stream_rng;
use crate::spectral::secular_phi;

/// Largest chain accepted by the dense resolvent.
pub const MAX_DENSE_STATES: usize = 200;

/// Largest matrix expanded by cofactors.
pub const MAX_COFACTOR_ORDER: usize = 6;

/// Poisson mass discarded by [`uniformization_oracle`].
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleChain {
    generator: DMatrix<f64>,
    mu: Vec<f64>,
    initial: Vec<f64>,
}

impl ReversibleChain {
    /// Checks zero row sums, non-positive off-diagonal entries, detailed
    /// balance `μ(i)L_ij = μ(j)L_ji` and that `initial` is a probability vector.
    pub fn new(generator: DMatrix<f64>, mu: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        let n = generator.nrows();
        if generator.ncols() != n || mu.len() != n || initial.len() != n || n == 0 {
            return Err(Error::invalid("generator, measure and initial law must share a positive dimension"));
        }
        if n > MAX_DENSE_STATES {
            return Err(Error::invalid(format!("dense resolvent limited to {MAX_DENSE_STATES} states")));
        }
        if mu.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::invalid("reversing measure must be positive"));
        }
        let scale = generator.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let row: f64 = generator.row(i).iter().sum();
            if row.abs() > 1e-12 * scale * n as f64 {
                return Err(Error::invalid(format!("row {i} sums to {row:e}")));
            }
            for j in 0..n {
                if i != j && generator[(i, j)] > 0.0 {
                    return Err(Error::invalid("off-diagonal generator entries must be non-positive"));
                }
                let a = mu[i] * generator[(i, j)];
                let b = mu[j] * generator[(j, i)];
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::invalid(format!("detailed balance fails between {i} and {j}")));
                }
            }
        }
        let total: f64 = initial.iter().sum();
        if initial.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("initial law must be a probability vector"));
        }
        Ok(Self { generator, mu, initial })
    }

    /// The trap model on `landscape` started from the uniform law, reversible for `μ = τ`.
    pub fn trap(landscape: &EnergyLandscape) -> Result<Self> {
        let n = landscape.len();
        Self::new(build_generator(landscape), landscape.mu().to_vec(), vec![1.0 / n as f64; n])
    }

    /// A random chain with symmetric conductances `c_ij` and measure `μ`,
    /// `L_ij = −c_ij/μ_i`, and a random initial law.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, 0);
        let mu: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
        let mut conductance = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let c = rng.random::<f64>();
                conductance[(i, j)] = c;
                conductance[(j, i)] = c;
            }
        }
        let generator = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (0..n).filter(|&k| k != i).map(|k| conductance[(i, k)]).sum::<f64>() / mu[i]
            } else {
                -conductance[(i, j)] / mu[i]
            }
        });
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        Self::new(generator, mu, raw.iter().map(|p| p / total).collect())
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Gershgorin bound: every eigenvalue lies in `[0, 2·max_i L_ii]`.
    pub fn spectral_bound(&self) -> f64 {
        2.0 * (0..self.len()).map(|i| self.generator[(i, i)]).fold(0.0, f64::max)
    }
}

/// `ν_t(j)` by the resolvent contour integral.
pub fn transition_prob_contour(chain: &ReversibleChain, j: usize, t: f64, c: &ContourSpec) -> Result<f64> {
    let n = chain.len();
    if j >= n {
        return Err(Error::invalid(format!("state {j} out of range")));
    }
    if c.enclosed_max < chain.spectral_bound() {
        return Err(Error::invalid("contour does not enclose the Gershgorin interval"));
    }
    let rhs = DMatrix::from_fn(n, 1, |k, _| Complex64::new(chain.initial[k] / chain.mu[k], 0.0));
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let est = contour_integrate(
        |lambda| {
            let shifted = DMatrix::from_fn(n, n, |a, b| {
                let diag = if a == b { lambda } else { Complex64::new(0.0, 0.0) };
                diag - chain.generator[(a, b)]
            });
            match shifted.lu().solve(&rhs) {
                Some(y) => (-lambda * t).exp() * y[(j, 0)] * chain.mu[j],
                None => {
                    failure.lock().expect("error slot").get_or_insert(Error::SingularSolve { re: lambda.re, im: lambda.im });
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        },
        c,
    );
    if let Some(e) = failure.into_inner().expect("error slot") {
        return Err(e);
    }
    Ok(est?.value.re)
}

/// `ν_0 e^{−tL}` by uniformization: with `q ≥ max_i L_ii` and `P = I − L/q`,
/// `ν_t = Σ_n Poisson(n; qt)·ν_0 Pⁿ`, truncated once the Poisson tail is
/// below `1e−12`.
pub fn uniformization_oracle(chain: &ReversibleChain, t: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t must be finite and non-negative"));
    }
    let n = chain.len();
    let q = (0..n).map(|i| chain.generator[(i, i)]).fold(0.0, f64::max);
    if t == 0.0 || q == 0.0 {
        return Ok(chain.initial.clone());
    }
    let step = DMatrix::<f64>::identity(n, n) - &chain.generator / q;
    let mean = q * t;
    let mut row = nalgebra::RowDVector::from_row_slice(&chain.initial);
    let mut acc = vec![0.0; n];
    let mut count: u64 = 0;
    loop {
        let k = count as f64;
        let log_weight = -mean + k * mean.ln() - ln_gamma(k + 1.0);
        let weight = log_weight.exp();
        for (a, v) in acc.iter_mut().zip(row.iter()) {
            *a += weight * v;
        }
        // Beyond the mode the tail is dominated by a geometric series.
        if k + 1.0 > mean {
            let ratio = mean / (k + 2.0);
            if weight * ratio / (1.0 - ratio) < UNIFORMIZATION_TAIL {
                break;
            }
        }
        row = &row * &step;
        count += 1;
        if count > 100_000_000 {
            return Err(Error::no_convergence("uniformization", format!("q·t = {mean:e} needs too many terms")));
        }
    }
    Ok(acc)
}

/// Determinant by cofactor expansion along the first row.
fn cofactor_det(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut sum = ComplexSum::new();
            for col in 0..n {
                let minor = m.clone().remove_row(0).remove_column(col);
                let sign = if col.is_multiple_of(2) { 1.0 } else { -1.0 };
                sum.add(m[(0, col)] * cofactor_det(&minor) * sign);
            }
            sum.value()
        }
    }
}

fn shifted_generator(landscape: &EnergyLandscape, lambda: Complex64) -> Result<DMatrix<Complex64>> {
    let n = landscape.len();
    if !(2..=MAX_COFACTOR_ORDER).contains(&n) {
        return Err(Error::invalid(format!("cofactor checks need 2 ≤ N ≤ {MAX_COFACTOR_ORDER}")));
    }
    let generator = build_generator(landscape);
    Ok(DMatrix::from_fn(n, n, |a, b| {
        let diag = if a == b { lambda } else { Complex64::new(0.0, 0.0) };
        diag - generator[(a, b)]
    }))
}

/// Both sides of an exact identity and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: Complex64, rhs: Complex64) -> Self {
        Self { lhs, rhs, residual: (lhs - rhs).norm() }
    }

    /// Residual relative to the larger side (absolute when both vanish).
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.lhs.norm().max(self.rhs.norm()).max(1.0)
    }
}

/// `Σ_k (−1)^{j+k}(x_k/x_j)·M_{kj}` against `Π_{s≠j}(λ − x_s)`, where `M_{kj}`
/// is the minor of `λI − L` without row `k` and column `j` (indices from 0).
pub fn determinant_identity_check(landscape: &EnergyLandscape, lambda: Complex64, j: usize) -> Result<IdentityCheck> {
    let m = shifted_generator(landscape, lambda)?;
    let n = landscape.len();
    if j >= n {
        return Err(Error::invalid(format!("site {j} out of range")));
    }
    let x = landscape.rates();
    let mut lhs = ComplexSum::new();
    for k in 0..n {
        let minor = m.clone().remove_row(k).remove_column(j);
        let sign = if (j + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        lhs.add(cofactor_det(&minor) * (sign * x[k] / x[j]));
    }
    let rhs = (0..n).filter(|&s| s != j).fold(Complex64::new(1.0, 0.0), |p, s| p * (lambda - x[s]));
    Ok(IdentityCheck::new(lhs.value(), rhs))
}

/// `det(λI − L)` against `−(1/N)·φ(λ)·Π_j(λ − x_j)` with `φ(λ) = Σ_j λ/(x_j − λ)`.
pub fn characteristic_identity_check(landscape: &EnergyLandscape, lambda: Complex64) -> Result<IdentityCheck> {
    let m = shifted_generator(landscape, lambda)?;
    let n = landscape.len() as f64;
    let product = landscape.rates().iter().fold(Complex64::new(1.0, 0.0), |p, x| p * (lambda - x));
    let rhs = -secular_phi(landscape, lambda)? * product / n;
    Ok(IdentityCheck::new(cofactor_det(&m), rhs))
}

/// `ν_t(j)` for the trap model from the uniform start, as
/// `(1/2πi)∮ e^{−tλ}/((x_j − λ)φ(λ)) dλ`.
pub fn trap_transition_contour(landscape: &EnergyLandscape, j: usize, t: f64, c: &ContourSpec) -> Result<f64> {
    if j >= landscape.len() {
        return Err(Error::invalid(format!("site {j} out of range")));
    }
    if c.enclosed_max < landscape.max_rate() {
        return Err(Error::invalid("contour does not enclose the largest rate"));
    }
    let xj = landscape.rates()[j];
    let rates = landscape.rates();
    let est = contour_integrate(
        |lambda| {
            let mut phi = ComplexSum::new();
            for x in rates {
                phi.add(lambda / (Complex64::new(*x, 0.0) - lambda));
            }
            (-lambda * t).exp() / ((Complex64::new(xj, 0.0) - lambda) * phi.value())
        },
        c,
    )?;
    Ok(est.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_site() -> EnergyLandscape {
        EnergyLandscape::from_rates(vec![0.25, 0.75]).unwrap()
    }

    #[test]
    fn two_state_mixing() {
        let chain = ReversibleChain::trap(&two_site()).unwrap();
        // Rates 0.125 out of state 0 and 0.375 out of state 1.
        for t in [0.0, 0.7, 5.0] {
            let nu = uniformization_oracle(&chain, t).unwrap();
            let exact0 = 0.75 + (0.5 - 0.75) * (-0.5 * t).exp();
            assert!((nu[0] - exact0).abs() < 1e-12);
            assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn contour_reproduces_initial_law_and_oracle() {
        let chain = ReversibleChain::random(6, 3).unwrap();
        let c = ContourSpec::rectangle_for(chain.spectral_bound(), &[2.0]);
        for j in 0..6 {
            let v = transition_prob_contour(&chain, j, 0.0, &c).unwrap();
            assert!((v - chain.initial()[j]).abs() < 1e-10);
        }
        let oracle = uniformization_oracle(&chain, 2.0).unwrap();
        for (j, o) in oracle.iter().enumerate() {
            assert!((transition_prob_contour(&chain, j, 2.0, &c).unwrap() - o).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_irreversible_generators() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -2.0, 3.0, -1.0, -1.0, -1.0, 2.0]);
        assert!(ReversibleChain::new(g, vec![1.0; 3], vec![1.0 / 3.0; 3]).is_err());
    }

    #[test]
    fn worked_determinant_example() {
        let r = determinant_identity_check(&two_site(), Complex64::new(0.3, 0.0), 0).unwrap();
        assert!((r.rhs - Complex64::new(-0.45, 0.0)).norm() < 1e-15);
        assert!(r.residual < 1e-12);
        let r = characteristic_identity_check(&two_site(), Complex64::new(0.3, 0.0)).unwrap();
        assert!((r.lhs - Complex64::new(-0.06, 0.0)).norm() < 1e-15);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn determinant_vanishes_at_other_rates() {
        let l = EnergyLandscape::from_rates(vec![0.1, 0.4, 0.45, 0.9]).unwrap();
        for j in 0..4 {
            for s in (0..4).filter(|s| *s != j) {
                let r = determinant_identity_check(&l, Complex64::new(l.rates()[s], 0.0), j).unwrap();
                assert!(r.lhs.norm() < 1e-12 && r.rhs.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trap_specialization_matches_general_form() {
        let l = EnergyLandscape::from_rates(vec![0.2, 0.5, 0.9]).unwrap();
        let chain = ReversibleChain::trap(&l).unwrap();
        let c = ContourSpec::rectangle_for(chain.spectral_bound(), &[2.0]);
        for j in 0..3 {
            let a = trap_transition_contour(&l, j, 2.0, &c).unwrap();
            let b = transition_prob_contour(&chain, j, 2.0, &c).unwrap();
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn order_limits() {
        let big = EnergyLandscape::from_rates((1..8).map(|i| i as f64 / 10.0).collect()).unwrap();
        assert!(determinant_identity_check(&big, Complex64::new(0.3, 0.1), 0).is_err());
    }
}
