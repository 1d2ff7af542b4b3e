//! Closed contours around the spectrum and integration along them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kronrod::{gk15, integrate, Tolerance};
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;

/// Doubling levels allowed before a closed-loop integral is declared divergent.
pub const MAX_DOUBLINGS: usize = 20;

/// Upper bound on integrand evaluations for one closed-loop integral.
const EVALUATION_BUDGET: usize = 1 << 23;

/// Empirical constant in the truncation bound `c·M^{α−1} ln M`.
pub const TRUNCATION_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    /// Rectangle `[−ε, right_end] × [−h, h]`.
    FiniteRectangle,
    /// Boundary of the `ε`-neighbourhood of `[0, M]` (a stadium).
    TruncatedInfinite,
}

/// A positively oriented loop enclosing `[0, enclosed_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub kind: ContourKind,
    /// Distance `ε` of the left edge into the negative half-plane; for the
    /// stadium, its radius.
    pub left_margin: f64,
    pub right_end: f64,
    pub half_height: f64,
    /// Coarsest panel density along straight edges.
    pub nodes_per_unit: f64,
    /// `M` of the stadium.
    pub truncation: f64,
    /// Right end of the real interval holding the singularities.
    pub enclosed_max: f64,
    /// Absolute tolerance on `(1/2πi)∮ f`.
    pub tol: f64,
}

/// Left margin `min(0.5, 2/max(times…, 1))`, which caps `e^{tε}` at `e²`.
pub fn default_left_margin(times: &[f64]) -> f64 {
    let t = times.iter().copied().fold(1.0, f64::max);
    (2.0 / t).min(0.5)
}

/// `c·M^{α−1} ln M`.
pub fn truncation_bound(alpha: f64, m: f64) -> f64 {
    TRUNCATION_CONSTANT * m.powf(alpha - 1.0) * m.ln()
}

/// Smallest `M = 2^k ≥ 2` past the bound's maximum whose truncation bound is below `tol`.
pub fn truncation_for_tolerance(alpha: f64, tol: f64) -> Result<f64> {
    let peak = (1.0 / (1.0 - alpha)).exp();
    let mut m: f64 = 2.0;
    for _ in 0..1000 {
        if m > peak && truncation_bound(alpha, m) < tol {
            return Ok(m);
        }
        m *= 2.0;
    }
    Err(Error::invalid(format!("no truncation below {tol:e} for alpha {alpha}")))
}

impl ContourSpec {
    /// Rectangle around `[0, enclosed_max]` suited to integrands carrying
    /// `e^{−tλ}` for each of `times`.
    pub fn rectangle_for(enclosed_max: f64, times: &[f64]) -> Self {
        ContourSpec {
            kind: ContourKind::FiniteRectangle,
            left_margin: default_left_margin(times),
            right_end: enclosed_max + 0.5,
            half_height: 0.5,
            nodes_per_unit: 4.0,
            truncation: 0.0,
            enclosed_max,
            tol: 1e-11,
        }
    }

    /// Stadium around `[0, M]` with `M` from the truncation bound at `trunc_tol`.
    pub fn stadium_for(alpha: f64, trunc_tol: f64, times: &[f64]) -> Result<Self> {
        let m = truncation_for_tolerance(alpha, trunc_tol)?;
        Ok(Self::stadium(m, default_left_margin(times)))
    }

    /// Stadium of radius `radius` around `[0, m]`.
    pub fn stadium(m: f64, radius: f64) -> Self {
        ContourSpec {
            kind: ContourKind::TruncatedInfinite,
            left_margin: radius,
            right_end: m + radius,
            half_height: radius,
            nodes_per_unit: 4.0,
            truncation: m,
            enclosed_max: m,
            tol: 1e-11,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.left_margin > 0.0
            && self.half_height > 0.0
            && self.nodes_per_unit > 0.0
            && self.tol > 0.0
            && self.enclosed_max >= 0.0;
        if !ok {
            return Err(Error::invalid("contour margins, height, density and tolerance must be positive"));
        }
        match self.kind {
            ContourKind::FiniteRectangle if self.right_end <= self.enclosed_max => {
                Err(Error::invalid("rectangle does not enclose the singular interval"))
            }
            ContourKind::TruncatedInfinite if !(self.truncation > 0.0) => {
                Err(Error::invalid("stadium needs a positive truncation M"))
            }
            _ => Ok(()),
        }
    }

    /// Truncation error bound for the stadium.
    pub fn truncation_error(&self, alpha: f64) -> f64 {
        match self.kind {
            ContourKind::FiniteRectangle => 0.0,
            ContourKind::TruncatedInfinite => truncation_bound(alpha, self.truncation),
        }
    }
}

/// Value of `(1/2πi)∮ f` with the sequence of refinement levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourEstimate {
    pub value: Complex64,
    /// `(evaluations, value)` per refinement level.
    pub trace: Vec<(usize, Complex64)>,
}

impl ContourEstimate {
    /// Change between the last two refinement levels.
    pub fn last_change(&self) -> f64 {
        match self.trace.len() {
            0 | 1 => f64::INFINITY,
            n => (self.trace[n - 1].1 - self.trace[n - 2].1).norm(),
        }
    }
}

/// `(1/2πi)∮ f(λ) dλ` over the loop described by `c`.
///
/// The rectangle is cut into straight pieces whose panels are graded
/// geometrically toward the two real-axis crossings; every refinement level
/// halves all panels until two successive levels agree to `c.tol`. The
/// stadium is integrated piecewise with adaptive Gauss–Kronrod.
pub fn contour_integrate<F>(f: F, c: &ContourSpec) -> Result<ContourEstimate>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    c.validate()?;
    match c.kind {
        ContourKind::FiniteRectangle => rectangle(&f, c),
        ContourKind::TruncatedInfinite => stadium(&f, c),
    }
}

struct Edge {
    start: Complex64,
    end: Complex64,
    /// Parameter breakpoints in `[0, 1]`.
    breaks: Vec<f64>,
}

/// Breakpoints on `[0, length]`: widths `first, 2·first, …` capped at `max_width`.
fn graded(length: f64, first: f64, max_width: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut s = 0.0;
    let mut w = first.min(max_width);
    while s + w < length * (1.0 - 1e-12) {
        s += w;
        out.push(s);
        w = (2.0 * w).min(max_width);
    }
    out.push(length);
    out
}

fn edge(start: Complex64, end: Complex64, focus_at_start: Option<bool>, first: f64, max_width: f64) -> Edge {
    let length = (end - start).norm();
    let raw = match focus_at_start {
        None => {
            let pieces = (length / max_width).ceil().max(1.0) as usize;
            (0..=pieces).map(|i| length * i as f64 / pieces as f64).collect()
        }
        Some(true) => graded(length, first, max_width),
        Some(false) => {
            let g = graded(length, first, max_width);
            g.iter().rev().map(|s| length - s).collect()
        }
    };
    Edge { start, end, breaks: raw.into_iter().map(|s| s / length).collect() }
}

fn rectangle<F>(f: &F, c: &ContourSpec) -> Result<ContourEstimate>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let (eps, r, h) = (c.left_margin, c.right_end, c.half_height);
    let focus = eps.min(h).min(r - c.enclosed_max);
    let max_width = (1.0 / c.nodes_per_unit).min(h);
    let z = |re: f64, im: f64| Complex64::new(re, im);
    let edges = [
        edge(z(-eps, -h), z(r, -h), None, focus, max_width),
        edge(z(r, -h), z(r, 0.0), Some(false), focus, max_width),
        edge(z(r, 0.0), z(r, h), Some(true), focus, max_width),
        edge(z(r, h), z(-eps, h), None, focus, max_width),
        edge(z(-eps, h), z(-eps, 0.0), Some(false), focus, max_width),
        edge(z(-eps, 0.0), z(-eps, -h), Some(true), focus, max_width),
    ];
    let panels: Vec<(Complex64, Complex64, f64, f64)> = edges
        .iter()
        .flat_map(|e| e.breaks.windows(2).map(move |w| (e.start, e.end, w[0], w[1])))
        .collect();

    let scale = Complex64::new(0.0, -1.0 / (2.0 * PI));
    let mut trace = Vec::new();
    let mut evaluations = 0;
    for level in 0..=MAX_DOUBLINGS {
        let splits = 1usize << level;
        evaluations += panels.len() * splits * 15;
        if evaluations > EVALUATION_BUDGET {
            break;
        }
        let parts: Vec<Complex64> = panels
            .par_iter()
            .map(|&(start, end, s0, s1)| {
                let dz = end - start;
                let mut g = |s: f64| f(start + dz * s) * dz;
                let mut acc = ComplexSum::new();
                let w = (s1 - s0) / splits as f64;
                for i in 0..splits {
                    let a = s0 + w * i as f64;
                    let b = if i + 1 == splits { s1 } else { a + w };
                    acc.add(gk15(&mut g, a, b).0);
                }
                acc.value()
            })
            .collect();
        let mut total = ComplexSum::new();
        for p in parts {
            total.add(p);
        }
        let value = total.value() * scale;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::no_convergence("contour integral", "non-finite integrand on the loop"));
        }
        trace.push((evaluations, value));
        if let [.., prev, last] = trace.as_slice() {
            if (last.1 - prev.1).norm() < c.tol {
                return Ok(ContourEstimate { value, trace });
            }
        }
    }
    let change = match trace.as_slice() {
        [.., prev, last] => (last.1 - prev.1).norm(),
        _ => f64::INFINITY,
    };
    Err(Error::no_convergence(
        "contour integral",
        format!("change {change:e} after {} levels; a pole may sit too close to the loop", trace.len()),
    ))
}

fn stadium<F>(f: &F, c: &ContourSpec) -> Result<ContourEstimate>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let (m, r) = (c.truncation, c.left_margin);
    let tol = Tolerance { abs: c.tol * 2.0 * PI / 4.0, rel: 0.0, max_intervals: 20_000 };
    let line_breaks: Vec<f64> = graded(m, r, f64::INFINITY);
    let mut total = ComplexSum::new();
    let mut evaluations = 0;

    // Bottom edge, left to right.
    let e = integrate(|s| f(Complex64::new(s, -r)), 0.0, m, &line_breaks, tol)?;
    evaluations += e.evaluations;
    total.add(e.value);
    // Right cap.
    let e = integrate(
        |th| {
            let u = Complex64::from_polar(1.0, th);
            f(Complex64::new(m, 0.0) + u * r) * (Complex64::i() * u * r)
        },
        -PI / 2.0,
        PI / 2.0,
        &[0.0],
        tol,
    )?;
    evaluations += e.evaluations;
    total.add(e.value);
    // Top edge, right to left.
    let e = integrate(|s| f(Complex64::new(s, r)), m, 0.0, &line_breaks, tol)?;
    evaluations += e.evaluations;
    total.add(e.value);
    // Left cap.
    let e = integrate(
        |th| {
            let u = Complex64::from_polar(1.0, th);
            f(u * r) * (Complex64::i() * u * r)
        },
        PI / 2.0,
        1.5 * PI,
        &[PI],
        tol,
    )?;
    evaluations += e.evaluations;
    total.add(e.value);

    let value = total.value() * Complex64::new(0.0, -1.0 / (2.0 * PI));
    Ok(ContourEstimate { value, trace: vec![(evaluations, value)] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect() -> ContourSpec {
        ContourSpec::rectangle_for(1.0, &[1.0])
    }

    #[test]
    fn residue_of_simple_poles() {
        let v = contour_integrate(|z| z.inv(), &rect()).unwrap().value;
        assert!((v - 1.0).norm() < 1e-10);
        let v = contour_integrate(|z| (z - 0.5).inv(), &rect()).unwrap().value;
        assert!((v - 1.0).norm() < 1e-10);
    }

    #[test]
    fn analytic_integrand_gives_zero() {
        let v = contour_integrate(|z| (z * z).exp() + z.powi(3), &rect()).unwrap().value;
        assert!(v.norm() < 1e-10);
        let v = contour_integrate(|z| (z - 3.0).inv(), &rect()).unwrap().value;
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn trace_records_convergence() {
        let est = contour_integrate(|z| (-20.0 * z).exp() / z, &ContourSpec::rectangle_for(1.0, &[20.0])).unwrap();
        assert!(est.trace.len() >= 2);
        assert!(est.last_change() < 1e-11);
        assert!((est.value - 1.0).norm() < 1e-10);
    }

    #[test]
    fn pole_on_the_loop_fails() {
        let c = ContourSpec::rectangle_for(1.0, &[1.0]);
        let pole = Complex64::new(-c.left_margin + 1e-10, 0.3);
        let res = contour_integrate(|z| (z - pole).inv(), &c);
        assert!(res.is_err());
    }

    #[test]
    fn stadium_residues() {
        let c = ContourSpec::stadium(1000.0, 0.5);
        let v = contour_integrate(|z| (z - 400.0).inv() + 2.0 * z.inv(), &c).unwrap().value;
        assert!((v - 3.0).norm() < 1e-9, "{v}");
        let v = contour_integrate(|z| (z + 1.0).inv(), &c).unwrap().value;
        assert!(v.norm() < 1e-9);
    }

    #[test]
    fn truncation_bound_shrinks_on_doubling_ladder() {
        let mut m = 64.0;
        let mut prev = truncation_bound(0.5, m);
        for _ in 0..10 {
            m *= 2.0;
            let b = truncation_bound(0.5, m);
            assert!(b < prev);
            prev = b;
        }
        let m = truncation_for_tolerance(0.5, 0.1).unwrap();
        assert!(truncation_bound(0.5, m) < 0.1);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut c = rect();
        c.left_margin = 0.0;
        assert!(contour_integrate(|z| z, &c).is_err());
        let mut c = rect();
        c.right_end = 0.5;
        assert!(contour_integrate(|z| z, &c).is_err());
    }
}
