//! Bounded piecewise-continuous functions of the rate, with their
//! discontinuity points exposed so quadrature panels can split there.

/// A bounded function `h` on `(0, ∞)` used as `E[h(x(t))]`.
pub trait Observable: Sync {
    fn eval(&self, x: f64) -> f64;

    /// Points where `h` may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Supremum norm bound.
    fn sup_norm(&self) -> f64 {
        1.0
    }
}

/// `h ≡ c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Observable for Constant {
    fn eval(&self, _x: f64) -> f64 {
        self.0
    }
    fn sup_norm(&self) -> f64 {
        self.0.abs()
    }
}

/// `h(x) = x`, bounded on the unit interval.
#[derive(Debug, Clone, Copy)]
pub struct Identity;

impl Observable for Identity {
    fn eval(&self, x: f64) -> f64 {
        x
    }
}

/// `h(x) = 1{x ≥ threshold}`: being in a shallow trap.
#[derive(Debug, Clone, Copy)]
pub struct AtLeast(pub f64);

impl Observable for AtLeast {
    fn eval(&self, x: f64) -> f64 {
        if x >= self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.0]
    }
}

/// `h(x) = e^{-c x}`.
#[derive(Debug, Clone, Copy)]
pub struct Decay(pub f64);

impl Observable for Decay {
    fn eval(&self, x: f64) -> f64 {
        (-self.0 * x).exp()
    }
}

/// Wraps a closure with explicit breakpoints.
pub struct FnObservable<F> {
    pub f: F,
    pub breaks: Vec<f64>,
    pub bound: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Observable for FnObservable<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
    fn sup_norm(&self) -> f64 {
        self.bound
    }
}
