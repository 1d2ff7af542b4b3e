use num_complex::Complex64;
use rayon::prelude::*;

use super::{CorrelationQuery, MAX_AMPLIFICATION_EXPONENT};
use crate::error::{Error, Result};
use crate::landscape::EnergyLandscape;
use crate::numeric::{CompensatedSum, ComplexSum};
use crate::observable::Observable;
use crate::quadrature::{contour_integrate, ContourEstimate, ContourSpec};
use crate::spectral::SpectralDecomposition;

/// Negative probabilities smaller than this are clipped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-12;

/// Law of the walker at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub probabilities: Vec<f64>,
    /// Entries that came out in `(−1e−12, 0)` and were set to zero.
    pub clipped: usize,
}

/// `ν_t(j) = Σ_k γ_k e^{−λ_k t}/(x_j − λ_k)`.
///
/// The two eigenvalues bracketing `x_j` give the largest terms, of opposite
/// sign; they are combined first and the rest is summed with compensation.
pub fn state_distribution_spectral(spectrum: &SpectralDecomposition, t_w: f64) -> Result<StateDistribution> {
    if !(t_w >= 0.0 && t_w.is_finite()) {
        return Err(Error::invalid("t_w must be finite and non-negative"));
    }
    let n = spectrum.len();
    let amplitudes: Vec<f64> = spectrum
        .weights()
        .iter()
        .zip(spectrum.eigenvalues())
        .map(|(g, l)| g * (-l * t_w).exp())
        .collect();
    let raw: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut pair = amplitudes[j] / spectrum.rate_gap(j, j);
            if j + 1 < n {
                pair += amplitudes[j + 1] / spectrum.rate_gap(j, j + 1);
            }
            let mut s = CompensatedSum::new();
            s.add(pair);
            for k in (0..n).filter(|&k| k != j && k != j + 1) {
                if amplitudes[k] != 0.0 {
                    s.add(amplitudes[k] / spectrum.rate_gap(j, k));
                }
            }
            s.value()
        })
        .collect();
    let mut clipped = 0;
    let mut probabilities = raw;
    for (state, p) in probabilities.iter_mut().enumerate() {
        if *p < 0.0 {
            if *p > -NEGATIVE_CLIP {
                *p = 0.0;
                clipped += 1;
            } else {
                return Err(Error::NegativeProbability { state, value: *p });
            }
        }
    }
    Ok(StateDistribution { probabilities, clipped })
}

/// `Π_N(t, t_w) = Σ_j ν_{t_w}(j) e^{−((N−1)/N) x_j t}`.
pub fn pi_spectral(spectrum: &SpectralDecomposition, q: CorrelationQuery) -> Result<f64> {
    Ok(pi_spectral_many(spectrum, q.t_w, &[q.t])?[0])
}

/// `Π_N(t, t_w)` for several `t` sharing one `t_w`.
pub fn pi_spectral_many(spectrum: &SpectralDecomposition, t_w: f64, ts: &[f64]) -> Result<Vec<f64>> {
    if ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid("t must be finite and non-negative"));
    }
    if spectrum.is_empty() {
        return Err(Error::invalid("empty landscape"));
    }
    let nu = state_distribution_spectral(spectrum, t_w)?;
    let c = spectrum.exit_factor();
    Ok(ts
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return 1.0;
            }
            let mut s = CompensatedSum::new();
            for (p, x) in nu.probabilities.iter().zip(spectrum.rates()) {
                s.add(p * (-c * x * t).exp());
            }
            s.value()
        })
        .collect())
}

/// `E[h(x(t))] = Σ_j ν_t(j) h(x_j)`.
pub fn expect_h_spectral(spectrum: &SpectralDecomposition, h: &dyn Observable, t: f64) -> Result<f64> {
    let nu = state_distribution_spectral(spectrum, t)?;
    let mut s = CompensatedSum::new();
    for (p, x) in nu.probabilities.iter().zip(spectrum.rates()) {
        let v = h.eval(*x);
        if v != 0.0 {
            s.add(p * v);
        }
    }
    Ok(s.value())
}

/// Evaluation route for the finite-`N` correlation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Contour,
}

/// Contour integrals only while `e^{t_w ε}` stays tame with a usable margin.
pub fn choose_method(q: CorrelationQuery) -> Method {
    if q.t_w.max(q.t) <= 50.0 {
        Method::Contour
    } else {
        Method::Spectral
    }
}

fn check_contour(landscape: &EnergyLandscape, c: &ContourSpec, t_w: f64) -> Result<()> {
    if landscape.is_empty() {
        return Err(Error::invalid("empty landscape"));
    }
    if c.enclosed_max < landscape.max_rate() {
        return Err(Error::invalid("contour does not enclose the largest rate"));
    }
    if t_w * c.left_margin > MAX_AMPLIFICATION_EXPONENT * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "t_w·ε = {:.3} exceeds {MAX_AMPLIFICATION_EXPONENT}; use spectral sums for this time",
            t_w * c.left_margin
        )));
    }
    Ok(())
}

/// `(1/2πi)∮ (e^{−t_w λ}/λ)·Σ_j w_j/(x_j−λ) / Σ_j 1/(x_j−λ) dλ`.
fn weighted_contour(landscape: &EnergyLandscape, c: &ContourSpec, t_w: f64, weights: &[f64]) -> Result<ContourEstimate> {
    check_contour(landscape, c, t_w)?;
    let rates = landscape.rates();
    contour_integrate(
        |lambda| {
            let mut num = ComplexSum::new();
            let mut den = ComplexSum::new();
            for (x, w) in rates.iter().zip(weights) {
                let r = (Complex64::new(*x, 0.0) - lambda).inv();
                den.add(r);
                if *w != 0.0 {
                    num.add(r * *w);
                }
            }
            (-lambda * t_w).exp() / lambda * num.value() / den.value()
        },
        c,
    )
}

/// The complex contour value behind [`pi_contour`]; its imaginary part
/// measures the quadrature error.
pub fn pi_contour_raw(landscape: &EnergyLandscape, c: &ContourSpec, q: CorrelationQuery) -> Result<ContourEstimate> {
    q.validate()?;
    let factor = landscape.exit_factor();
    let weights: Vec<f64> = landscape.rates().iter().map(|x| (-factor * x * q.t).exp()).collect();
    weighted_contour(landscape, c, q.t_w, &weights)
}

pub fn pi_contour(landscape: &EnergyLandscape, c: &ContourSpec, q: CorrelationQuery) -> Result<f64> {
    Ok(pi_contour_raw(landscape, c, q)?.value.re)
}

pub fn expect_h_contour(landscape: &EnergyLandscape, c: &ContourSpec, h: &dyn Observable, t: f64) -> Result<f64> {
    let weights: Vec<f64> = landscape.rates().iter().map(|x| h.eval(*x)).collect();
    Ok(weighted_contour(landscape, c, t, &weights)?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{equilibrium_measure, sample_landscape, LandscapeConfig};
    use crate::observable::{AtLeast, Constant, Identity};
    use crate::spectral::compute_spectrum;

    fn two_site() -> (EnergyLandscape, SpectralDecomposition) {
        let l = EnergyLandscape::from_rates(vec![0.25, 0.75]).unwrap();
        let s = compute_spectrum(&l, 1e-15).unwrap();
        (l, s)
    }

    #[test]
    fn starts_uniform_and_equilibrates() {
        let (l, s) = two_site();
        let nu = state_distribution_spectral(&s, 0.0).unwrap();
        for p in &nu.probabilities {
            assert!((p - 0.5).abs() < 1e-15);
        }
        let nu = state_distribution_spectral(&s, 1e3).unwrap();
        for (p, q) in nu.probabilities.iter().zip(equilibrium_measure(&l)) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn two_site_closed_forms() {
        let (_, s) = two_site();
        let v = pi_spectral(&s, CorrelationQuery::new(1.0, 0.0).unwrap()).unwrap();
        let exact = ((-0.125f64).exp() + (-0.375f64).exp()) / 2.0;
        assert!((v - exact).abs() < 1e-15);
        assert_eq!(pi_spectral(&s, CorrelationQuery::new(0.0, 3.0).unwrap()).unwrap(), 1.0);
        assert!((expect_h_spectral(&s, &Identity, 1e3).unwrap() - 0.375).abs() < 1e-10);
        assert!((expect_h_spectral(&s, &Constant(1.0), 7.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((expect_h_spectral(&s, &Identity, 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn contour_matches_spectral() {
        let l = sample_landscape(&LandscapeConfig::new(0.5, 40, 11)).unwrap();
        let s = compute_spectrum(&l, 1e-15).unwrap();
        for (t, t_w) in [(0.0, 5.0), (3.0, 0.5), (20.0, 40.0)] {
            let q = CorrelationQuery::new(t, t_w).unwrap();
            let c = ContourSpec::rectangle_for(l.max_rate(), &[t, t_w]);
            let raw = pi_contour_raw(&l, &c, q).unwrap();
            let spec = pi_spectral(&s, q).unwrap();
            assert!((raw.value.re - spec).abs() < 1e-8, "{t},{t_w}: {} vs {spec}", raw.value.re);
            assert!(raw.value.im.abs() < 1e-10);
        }
        let c = ContourSpec::rectangle_for(l.max_rate(), &[10.0]);
        let a = expect_h_contour(&l, &c, &AtLeast(0.3), 10.0).unwrap();
        let b = expect_h_spectral(&s, &AtLeast(0.3), 10.0).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert!(expect_h_contour(&l, &c, &AtLeast(2.0), 10.0).unwrap().abs() < 1e-10);
        assert!((expect_h_contour(&l, &c, &Constant(1.0), 10.0).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn amplification_guard() {
        let (l, _) = two_site();
        let c = ContourSpec::rectangle_for(l.max_rate(), &[1.0]);
        assert!(pi_contour(&l, &c, CorrelationQuery::new(1.0, 100.0).unwrap()).is_err());
        assert_eq!(choose_method(CorrelationQuery::new(1.0, 100.0).unwrap()), Method::Spectral);
    }
}
