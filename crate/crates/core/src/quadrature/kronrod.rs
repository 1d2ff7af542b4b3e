//! Gauss–Kronrod 7/15 rule and a globally adaptive integrator on real
//! intervals for complex-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::ComplexSum;

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One application of the 15-point rule on `[a, b]`: (Kronrod value, |K − G|).
pub fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * KRONROD_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * KRONROD_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * GAUSS_WEIGHTS[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Tolerances and budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, max_intervals: 4000 }
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive integral of `f` over `[a, b]`, started from the panels
/// delimited by `breaks` (interior points, any order; those outside are ignored).
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = breaks.iter().copied().filter(|p| *p > lo && *p < hi).collect();
    points.push(lo);
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut running = Complex64::new(0.0, 0.0);
    let mut running_err = 0.0;
    for w in points.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        running += value;
        running_err += error;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    let mut since_refresh = 0;
    loop {
        if since_refresh >= 64 {
            (running, running_err) = totals(&heap);
            since_refresh = 0;
        }
        if !running.re.is_finite() || !running.im.is_finite() {
            return Err(Error::no_convergence("adaptive quadrature", "non-finite integrand value"));
        }
        if running_err <= tol.abs.max(tol.rel * running.norm()) {
            let (value, error) = totals(&heap);
            return Ok(Estimate { value: value * sign, error, evaluations });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::no_convergence(
                "adaptive quadrature",
                format!("error {running_err:e} after {} intervals on [{lo}, {hi}]", heap.len()),
            ));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        running -= worst.value;
        running_err -= worst.error;
        since_refresh += 1;
        if !(mid > worst.a && mid < worst.b) {
            // Interval cannot be split further in floating point.
            running += worst.value;
            heap.push(Piece { error: 0.0, ..worst });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, a, b);
            evaluations += 15;
            running += value;
            running_err += error;
            heap.push(Piece { a, b, value, error });
        }
    }
}

fn totals(heap: &BinaryHeap<Piece>) -> (Complex64, f64) {
    let mut pieces: Vec<&Piece> = heap.iter().collect();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut sum = ComplexSum::new();
    let mut err = 0.0;
    for p in pieces {
        sum.add(p.value);
        err += p.error;
    }
    (sum.value(), err)
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<(f64, f64)> {
    let e = integrate(|x| Complex64::new(f(x), 0.0), a, b, breaks, tol)?;
    Ok((e.value.re, e.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let (v, _) = gk15(&mut |x: f64| Complex64::new(x.powi(20), 0.0), 0.0, 1.0);
        assert!((v.re - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_sharp_peak() {
        let eps: f64 = 1e-4;
        let (v, _) = integrate_real(|x| eps / (x * x + eps * eps), -1.0, 1.0, &[], Tolerance::new(1e-12, 1e-12)).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let t = Tolerance::new(1e-13, 1e-13);
        let (a, _) = integrate_real(|x| x.exp(), 0.0, 1.0, &[0.3], t).unwrap();
        let (b, _) = integrate_real(|x| x.exp(), 1.0, 0.0, &[], t).unwrap();
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut t = Tolerance::new(1e-15, 0.0);
        t.max_intervals = 3;
        assert!(integrate_real(|x| x.abs().sqrt().recip(), -1.0, 1.0, &[], t).is_err());
    }
}
