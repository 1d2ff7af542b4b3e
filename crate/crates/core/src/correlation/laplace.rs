use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, ComplexSum};
use crate::observable::Observable;
use crate::tauberian::{bromwich_invert, BromwichPath};

const BLOCK: usize = 1024;
const SERIES_TERMS: usize = 14;
/// Rates above this multiple of `|ω|` are summed through the moment series.
const SERIES_RATIO: f64 = 16.0;

/// `S(ω) = Σ_j w_j/(x_j + ω)` for sorted positive rates, in `O(#{x_j ≲ |ω|})`
/// per evaluation: rates well above `|ω|` enter through precomputed scaled
/// moments `Σ w_j (s/x_j)^{m+1}` of block suffixes.
#[derive(Debug, Clone)]
pub struct StieltjesSum {
    rates: Vec<f64>,
    weights: Vec<f64>,
    /// First index of each block.
    starts: Vec<usize>,
    /// Suffix moments scaled by the block's first rate.
    moments: Vec<[f64; SERIES_TERMS]>,
}

impl StieltjesSum {
    pub fn new(rates: &[f64], weights: Vec<f64>) -> Result<Self> {
        if rates.len() != weights.len() {
            return Err(Error::invalid("rates and weights differ in length"));
        }
        if rates.first().is_some_and(|x| !(*x > 0.0)) || rates.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::invalid("rates must be positive and sorted"));
        }
        let starts: Vec<usize> = (0..rates.len()).step_by(BLOCK).collect();
        let mut moments = vec![[0.0; SERIES_TERMS]; starts.len()];
        for b in (0..starts.len()).rev() {
            let s = rates[starts[b]];
            let end = starts.get(b + 1).copied().unwrap_or(rates.len());
            let mut acc = [CompensatedSum::new(); SERIES_TERMS];
            for j in starts[b]..end {
                let r = s / rates[j];
                let mut term = weights[j] * r;
                for a in acc.iter_mut() {
                    a.add(term);
                    term *= r;
                }
            }
            if b + 1 < starts.len() {
                let r = s / rates[starts[b + 1]];
                let mut scale = r;
                for (a, m) in acc.iter_mut().zip(moments[b + 1]) {
                    a.add(m * scale);
                    scale *= r;
                }
            }
            for (slot, a) in moments[b].iter_mut().zip(acc) {
                *slot = a.value();
            }
        }
        Ok(Self { rates: rates.to_vec(), weights, starts, moments })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn eval(&self, omega: Complex64) -> Complex64 {
        let cutoff = SERIES_RATIO * omega.norm();
        let block = self.starts.partition_point(|&i| self.rates[i] <= cutoff);
        let direct_end = self.starts.get(block).copied().unwrap_or(self.rates.len());
        let mut sum = ComplexSum::new();
        for j in 0..direct_end {
            if self.weights[j] != 0.0 {
                sum.add((omega + self.rates[j]).inv() * self.weights[j]);
            }
        }
        if block < self.starts.len() {
            let s = self.rates[self.starts[block]];
            let z = -omega / s;
            let mut series = Complex64::new(0.0, 0.0);
            for m in (0..SERIES_TERMS).rev() {
                series = series * z + self.moments[block][m];
            }
            sum.add(series / s);
        }
        sum.value()
    }
}

/// `Ĝ(ω) = (1/ω)·Σ w_j/(x_j+ω) / Σ 1/(x_j+ω)`: the Laplace transform in `t`
/// of `Σ_j ν_t(j) w_j`.
#[derive(Debug, Clone)]
pub struct RatioTransform {
    numerator: StieltjesSum,
    denominator: StieltjesSum,
}

impl RatioTransform {
    pub fn new(rates: &[f64], weights: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("empty landscape"));
        }
        Ok(Self {
            numerator: StieltjesSum::new(rates, weights)?,
            denominator: StieltjesSum::new(rates, vec![1.0; rates.len()])?,
        })
    }

    pub fn eval(&self, omega: Complex64) -> Complex64 {
        self.numerator.eval(omega) / (self.denominator.eval(omega) * omega)
    }

    /// Inverse transform at `s` along the folded Bromwich path.
    pub fn invert(&self, s: f64, tol: f64) -> Result<f64> {
        Ok(bromwich_invert(|w| self.eval(w), s, &BromwichPath::new(0.5).with_tol(tol))?.value)
    }
}

/// Transform in `t_w` of `Π(t, t_w)` at fixed `t`.
pub fn pi_transform(rates: &[f64], t: f64) -> Result<RatioTransform> {
    let n = rates.len() as f64;
    let factor = (n - 1.0) / n;
    RatioTransform::new(rates, rates.iter().map(|x| (-factor * x * t).exp()).collect())
}

/// Transform in `t` of `E[h(x(t))]`.
pub fn expect_h_transform(rates: &[f64], h: &dyn Observable) -> Result<RatioTransform> {
    RatioTransform::new(rates, rates.iter().map(|x| h.eval(*x)).collect())
}

/// `Π(t, t_w)` through the transform in `t_w`; cost linear in the number of
/// rates per transform evaluation.
pub fn pi_laplace(rates: &[f64], t: f64, t_w: f64, tol: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    pi_transform(rates, t)?.invert(t_w, tol)
}

pub fn expect_h_laplace(rates: &[f64], h: &dyn Observable, t: f64, tol: f64) -> Result<f64> {
    expect_h_transform(rates, h)?.invert(t, tol)
}
