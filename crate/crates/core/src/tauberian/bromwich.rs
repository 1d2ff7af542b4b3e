use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::quadrature::{integrate, Tolerance};

/// Inversion contour: an arc of radius `√2·r₀` (with `r₀ = min(1/s, 1)`)
/// through the positive axis, rays along `arg ω = ±3π/4` out to `−1 ± i`,
/// arcs `−t ± i t^{1/ρ}` for `t ≥ 1`, and horizontals at height `±K` closing
/// back to `x ± iK`. `K` is doubled until the horizontals contribute less
/// than `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromwichPath {
    pub rho: f64,
    /// Abscissa of the closing horizontals; defaults to `1/s`.
    pub x: Option<f64>,
    pub k_start: f64,
    pub max_doublings: usize,
    pub tol: f64,
    /// `G` real, so `Ĝ(ω̄) = conj Ĝ(ω)` and only the upper half is integrated.
    pub real_valued: bool,
}

impl BromwichPath {
    pub fn new(rho: f64) -> Self {
        Self { rho, x: None, k_start: 4.0, max_doublings: 60, tol: 1e-9, real_valued: true }
    }

    /// `ρ = min(γ, β)/2`.
    pub fn for_exponents(gamma: f64, beta: f64) -> Self {
        Self::new(0.5 * gamma.min(beta))
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BromwichEstimate {
    pub value: f64,
    /// Final height of the closing horizontals.
    pub k: f64,
    /// `|(1/2πi)∫_{γ₃}|` at the final `K`.
    pub closing_magnitude: f64,
    /// Imaginary part of the full-path integral when both halves are integrated.
    pub imaginary_part: f64,
}

/// `G(s) = (1/2πi)∫ e^{sω} Ĝ(ω) dω` over the folded path.
pub fn bromwich_invert<F: Fn(Complex64) -> Complex64>(
    g_hat: F,
    s: f64,
    path: &BromwichPath,
) -> Result<BromwichEstimate> {
    if !(s > 0.0) {
        return Err(Error::invalid("Bromwich inversion needs s > 0"));
    }
    if !(path.rho > 0.0 && path.rho < 1.0) {
        return Err(Error::invalid("path exponent rho must lie in (0, 1)"));
    }
    let r0 = (1.0 / s).min(1.0);
    let x = path.x.unwrap_or(1.0 / s);
    let tol = Tolerance { abs: path.tol * PI / 8.0, rel: 0.0, max_intervals: 20_000 };
    let f = |z: Complex64| (z * s).exp() * g_hat(z);
    let halves: &[f64] = if path.real_valued { &[1.0] } else { &[1.0, -1.0] };

    // Pieces independent of K: arc and 3π/4 rays. `side` = +1 upper, −1 lower;
    // each half is integrated in the direction of the upward-oriented path.
    let mut fixed = ComplexSum::new();
    for &side in halves {
        let arc = integrate(
            |th| {
                let z = Complex64::from_polar(2f64.sqrt() * r0, th * side);
                f(z) * Complex64::i() * z
            },
            0.0,
            0.75 * PI,
            &[0.25 * PI, 0.5 * PI],
            tol,
        )?;
        let dir = Complex64::new(-1.0, side);
        let breaks: Vec<f64> = (1..60).map(|i| r0 * 2f64.powi(i)).filter(|u| *u < 1.0).collect();
        let ray = integrate(|u| f(dir * u) * dir, r0, 1.0, &breaks, tol)?;
        // The lower ray runs inward, so it enters with the opposite sign.
        fixed.add(arc.value + ray.value * side);
    }

    let arc_point = |t: f64, side: f64| Complex64::new(-t, side * t.powf(1.0 / path.rho));
    let arc_speed = |t: f64, side: f64| Complex64::new(-1.0, side * t.powf(1.0 / path.rho - 1.0) / path.rho);
    let mut parabolic = ComplexSum::new();
    let mut t_done = 1.0;
    let mut k = path.k_start;
    for _ in 0..=path.max_doublings {
        let t_end = k.powf(path.rho);
        if t_end > t_done {
            for &side in halves {
                let e = integrate(|t| f(arc_point(t, side)) * arc_speed(t, side), t_done, t_end, &[], tol)?;
                parabolic.add(e.value * side);
            }
            t_done = t_end;
        }
        let mut closing = ComplexSum::new();
        let breaks: Vec<f64> = (0..60).map(|i| x - 2f64.powi(i) / s).filter(|u| *u > -t_end).collect();
        for &side in halves {
            let e = integrate(|u| f(Complex64::new(u, side * k)), -t_end, x, &breaks, tol)?;
            closing.add(e.value * side);
        }
        let closing_magnitude = closing.value().norm() / (2.0 * PI);
        if closing_magnitude < path.tol {
            let mut total = fixed;
            total.add(parabolic.value());
            let v = total.value();
            let (value, imaginary_part) = if path.real_valued {
                (v.im / PI, 0.0)
            } else {
                let w = v * Complex64::new(0.0, -1.0 / (2.0 * PI));
                (w.re, w.im)
            };
            return Ok(BromwichEstimate { value, k, closing_magnitude, imaginary_part });
        }
        k *= 2.0;
    }
    Err(Error::no_convergence(
        "Bromwich inversion",
        format!("closing horizontals still above {} at K = {k:e}", path.tol),
    ))
}
