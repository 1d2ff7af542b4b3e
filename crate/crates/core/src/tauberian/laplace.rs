use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Bound on `|G|` and the target accuracy of a forward transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceOptions {
    pub bound: f64,
    pub tol: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self { bound: 1.0, tol: 1e-12 }
    }
}

/// Breakpoints every few oscillation periods (and geometric near the origin).
fn panel_breaks(length: f64, scale: f64, frequency: f64) -> Vec<f64> {
    let mut b: Vec<f64> = (0..40).map(|i| scale * 2f64.powi(i - 20)).filter(|p| *p < length).collect();
    if frequency > 0.0 {
        let step = 4.0 * std::f64::consts::TAU / frequency;
        let count = (length / step).min(5000.0) as usize;
        b.extend((1..=count).map(|i| i as f64 * step));
    }
    b
}

/// `∫₀^∞ G(t) e^{−tω} dt` for `Re ω > 0`, truncated where `‖G‖ e^{−t Re ω}` is negligible.
pub fn laplace_forward<F: Fn(f64) -> f64>(g: F, omega: Complex64, opts: LaplaceOptions) -> Result<Complex64> {
    if !(omega.re > 0.0) {
        return Err(Error::invalid("forward Laplace transform needs Re ω > 0"));
    }
    let end = ((opts.bound / (opts.tol * omega.re)).ln() / omega.re).max(1.0 / omega.re);
    let breaks = panel_breaks(end, 1.0 / omega.norm(), omega.im.abs());
    let tol = Tolerance { abs: opts.tol, rel: 0.0, max_intervals: 50_000 };
    Ok(integrate(|t| g(t) * (-omega * t).exp(), 0.0, end, &breaks, tol)?.value)
}

/// Analytic continuation of the transform of a `G` that extends analytically
/// and boundedly to the right half-plane: the integral runs along the ray of
/// angle `−arg(ω)/2`, which converges for every `ω` off the negative axis.
pub fn laplace_forward_analytic<F: Fn(Complex64) -> Complex64>(
    g: F,
    omega: Complex64,
    opts: LaplaceOptions,
) -> Result<Complex64> {
    let arg = omega.arg();
    if omega.norm() == 0.0 || arg.abs() >= std::f64::consts::PI {
        return Err(Error::OnCut { re: omega.re, im: omega.im });
    }
    let dir = Complex64::from_polar(1.0, -0.5 * arg);
    let rate = omega.norm() * (0.5 * arg).cos();
    let end = ((opts.bound / (opts.tol * rate)).ln() / rate).max(1.0 / rate);
    let freq = omega.norm() * (0.5 * arg).sin().abs();
    let breaks = panel_breaks(end, 1.0 / omega.norm(), freq);
    let tol = Tolerance { abs: opts.tol, rel: 0.0, max_intervals: 50_000 };
    let e = integrate(|r| g(dir * r) * (-(dir * omega) * r).exp() * dir, 0.0, end, &breaks, tol)?;
    Ok(e.value)
}
