use std::cell::RefCell;
use std::sync::Mutex;

use num_complex::Complex64;

use super::{CorrelationQuery, MAX_AMPLIFICATION_EXPONENT};
use crate::error::{Error, Result};
use crate::landscape::check_alpha;
use crate::observable::{Constant, Decay, Observable};
use crate::quadrature::{contour_integrate, ex_integral, integrate, ContourSpec, SingularIntegralSpec, Tolerance};
use crate::tauberian::{bromwich_invert, BromwichPath};

/// `(1/2πi)∮ (e^{−t_w λ}/λ)·E[h(x)/(x−λ)]/E[1/(x−λ)] dλ` with `x ~ α x^{α−1}`.
fn limit_contour(alpha: f64, c: &ContourSpec, t_w: f64, h: &dyn Observable) -> Result<f64> {
    check_alpha(alpha)?;
    if c.enclosed_max < 1.0 {
        return Err(Error::invalid("contour must enclose the unit interval"));
    }
    if t_w * c.left_margin > MAX_AMPLIFICATION_EXPONENT * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("t_w·ε = {:.3} exceeds {MAX_AMPLIFICATION_EXPONENT}", t_w * c.left_margin)));
    }
    let spec = SingularIntegralSpec::new(alpha).with_tol((c.tol * 1e-2).max(1e-15));
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let one = Constant(1.0);
    let result = contour_integrate(
        |lambda| match (ex_integral(h, lambda, &spec), ex_integral(&one, lambda, &spec)) {
            (Ok(num), Ok(den)) => (-lambda * t_w).exp() / lambda * num / den,
            (Err(e), _) | (_, Err(e)) => {
                failure.lock().expect("error slot").get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        c,
    );
    if let Some(e) = failure.into_inner().expect("error slot") {
        return Err(e);
    }
    Ok(result?.value.re)
}

/// `lim_{N→∞} Π_N(t, t_w)`.
pub fn pi_limit(alpha: f64, c: &ContourSpec, q: CorrelationQuery) -> Result<f64> {
    q.validate()?;
    if q.t == 0.0 {
        return Ok(1.0);
    }
    limit_contour(alpha, c, q.t_w, &Decay(q.t))
}

/// `lim_{N→∞} E_N[h(x(t))]`.
pub fn expect_h_limit(alpha: f64, c: &ContourSpec, h: &dyn Observable, t: f64) -> Result<f64> {
    limit_contour(alpha, c, t, h)
}

fn reject_cut(omega: Complex64) -> Result<()> {
    if (omega.im == 0.0 && omega.re <= 0.0) || !omega.re.is_finite() || !omega.im.is_finite() {
        Err(Error::OnCut { re: omega.re, im: omega.im })
    } else {
        Ok(())
    }
}

/// `E[1/(z + x)]` with `x ~ α x^{α−1}`.
fn resolvent_mean(alpha: f64, z: Complex64) -> Result<Complex64> {
    let spec = SingularIntegralSpec::new(alpha).with_tol(1e-14 * (1.0 / z.norm()).clamp(1e-6, 1.0));
    Ok(-ex_integral(&Constant(1.0), -z, &spec)?)
}

/// `Π̂(θ, ω) = ∫₀^∞ e^{−ωs} Π(θs, s) ds` in the `N → ∞` limit:
/// `E_x[1/((ω+xθ+x)(ω+xθ)·E_y[1/(ω+xθ+y)])]`, analytic off `(−∞, 0]`.
pub fn pi_hat_limit(alpha: f64, theta: f64, omega: Complex64) -> Result<Complex64> {
    check_alpha(alpha)?;
    reject_cut(omega)?;
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta must be finite and non-negative"));
    }
    if theta == 0.0 {
        return Ok(omega.inv());
    }
    let inv = 1.0 / alpha;
    let mut failure = None;
    let e = integrate(
        |u| {
            let x = u.powf(inv);
            let z = omega + x * theta;
            match resolvent_mean(alpha, z) {
                Ok(m) => ((z + x) * z * m).inv(),
                Err(err) => {
                    failure.get_or_insert(err);
                    Complex64::new(f64::NAN, f64::NAN)
                }
            }
        },
        0.0,
        1.0,
        &[],
        Tolerance { abs: 0.0, rel: 1e-11, max_intervals: 4000 },
    );
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(e?.value)
}

/// `Π(θs, s)` by inverting [`pi_hat_limit`] at `s`.
pub fn pi_limit_laplace(alpha: f64, theta: f64, s: f64, tol: f64) -> Result<f64> {
    let failure = RefCell::new(None);
    let est = bromwich_invert(
        |w| match pi_hat_limit(alpha, theta, w) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        s,
        &BromwichPath::new(0.5).with_tol(tol),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est?.value)
}

/// `Ĥ(ω) = (1/ω)·E[h(x)/(x+ω)]/E[1/(x+ω)]`, the transform of `E[h(x(t))]`.
pub fn expect_h_hat_limit(alpha: f64, h: &dyn Observable, omega: Complex64) -> Result<Complex64> {
    check_alpha(alpha)?;
    reject_cut(omega)?;
    let spec = SingularIntegralSpec::new(alpha).with_tol(1e-14 * (1.0 / omega.norm()).clamp(1e-6, 1.0));
    let num = ex_integral(h, -omega, &spec)?;
    let den = ex_integral(&Constant(1.0), -omega, &spec)?;
    Ok(num / den / omega)
}

/// `E[h(x(t))]` in the `N → ∞` limit through its transform; suited to long
/// times where the contour form would amplify `e^{tε}`.
pub fn expect_h_limit_laplace(alpha: f64, h: &dyn Observable, t: f64, tol: f64) -> Result<f64> {
    let failure = RefCell::new(None);
    let est = bromwich_invert(
        |w| match expect_h_hat_limit(alpha, h, w) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        },
        t,
        &BromwichPath::new(0.5 * alpha).with_tol(tol),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est?.value)
}
