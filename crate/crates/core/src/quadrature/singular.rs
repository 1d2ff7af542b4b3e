//! Integrals against the power-law rate density `α x^{α−1}` on `(0, 1]` and
//! the incomplete Beta tail behind the ageing function.

use num_complex::Complex64;

use super::kronrod::{integrate, integrate_real, Tolerance};
use crate::error::{Error, Result};
use crate::landscape::check_alpha;
use crate::observable::Observable;

/// Parameters of an expectation against `α x^{α−1} dx` on `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularIntegralSpec {
    pub alpha: f64,
    pub abs_tol: f64,
}

impl SingularIntegralSpec {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, abs_tol: 1e-13 }
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }
}

/// `∫₀¹ h(x)/(λ − x) · α x^{α−1} dx`.
///
/// The substitution `x = u^{1/α}` turns the weight into `du`, leaving a
/// bounded integrand; panels split at the images of `h`'s breakpoints and
/// at the point of `[0, 1]` nearest to `λ`.
pub fn ex_integral(h: &dyn Observable, lambda: Complex64, spec: &SingularIntegralSpec) -> Result<Complex64> {
    check_alpha(spec.alpha)?;
    if lambda.im == 0.0 && (0.0..=1.0).contains(&lambda.re) {
        return Err(Error::OnCut { re: lambda.re, im: lambda.im });
    }
    let inv = 1.0 / spec.alpha;
    let mut breaks: Vec<f64> = h
        .breakpoints()
        .into_iter()
        .filter(|b| *b > 0.0 && *b < 1.0)
        .map(|b| b.powf(spec.alpha))
        .collect();
    if lambda.re > 0.0 && lambda.re < 1.0 {
        breaks.push(lambda.re.powf(spec.alpha));
    }
    let est = integrate(
        |u| {
            let x = u.powf(inv);
            let hv = h.eval(x);
            if hv == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                hv / (lambda - x)
            }
        },
        0.0,
        1.0,
        &breaks,
        Tolerance::new(spec.abs_tol, 1e-14),
    )?;
    Ok(est.value)
}

/// `∫_lower^1 u^{−α}(1−u)^{α−1} du`, to about `1e−13` absolute.
///
/// Split at `1/2`; the left piece uses `u = v^{1/(1−α)}` and the right piece
/// `1 − u = s^{1/α}`, both of which leave smooth bounded integrands.
pub fn incomplete_beta_tail(alpha: f64, lower: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&lower) {
        return Err(Error::invalid(format!("lower limit {lower} outside [0, 1]")));
    }
    let tol = Tolerance::new(1e-15, 1e-15);
    let mut total = 0.0;
    if lower < 0.5 {
        let p = 1.0 / (1.0 - alpha);
        let (a, b) = (lower.powf(1.0 - alpha), 0.5f64.powf(1.0 - alpha));
        let (v, _) = integrate_real(|v| (1.0 - v.powf(p)).powf(alpha - 1.0), a, b, &[], tol)?;
        total += v / (1.0 - alpha);
    }
    let m = lower.max(0.5);
    if m < 1.0 {
        let p = 1.0 / alpha;
        let top = (1.0 - m).powf(alpha);
        let (v, _) = integrate_real(|s| (1.0 - s.powf(p)).powf(-alpha), 0.0, top, &[], tol)?;
        total += v / alpha;
    }
    Ok(total)
}
