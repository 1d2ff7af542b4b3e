//! Two-time correlation functions of the trap dynamics.
//!
//! `Π(t, t_w)` is the probability of no jump in `(t_w, t_w + t]` from the
//! uniform start; `E[h(x(t))]` averages an observable of the current rate.
//! Each quantity has a spectral sum (exact, any time), a contour integral
//! (moderate times, cross-validation), a Laplace-domain form inverted along
//! a folded path (large systems, long times), and an `N → ∞` limit.

mod finite;
mod laplace;
mod limit;
mod zlaw;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::check_alpha;
use crate::quadrature::incomplete_beta_tail;

pub use finite::{
    choose_method, expect_h_contour, expect_h_spectral, pi_contour, pi_contour_raw, pi_spectral, pi_spectral_many,
    state_distribution_spectral, Method, StateDistribution,
};
pub use laplace::{expect_h_laplace, expect_h_transform, pi_laplace, pi_transform, RatioTransform, StieltjesSum};
pub use limit::{expect_h_limit, expect_h_limit_laplace, expect_h_hat_limit, pi_hat_limit, pi_limit, pi_limit_laplace};
pub use zlaw::{z_distribution_checks, ThetaDeviation, ZReport};

/// Largest `t_w·ε` accepted by contour evaluations (`e^{t_w ε} ≤ e²`).
pub const MAX_AMPLIFICATION_EXPONENT: f64 = 2.0;

/// Observation times: `t` after the waiting time `t_w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationQuery {
    pub t: f64,
    pub t_w: f64,
}

impl CorrelationQuery {
    pub fn new(t: f64, t_w: f64) -> Result<Self> {
        let q = Self { t, t_w };
        q.validate()?;
        Ok(q)
    }

    /// `t = θ·t_w`.
    pub fn from_ratio(theta: f64, t_w: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta must be finite and non-negative"));
        }
        Self::new(theta * t_w, t_w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t >= 0.0 && self.t_w >= 0.0 && self.t.is_finite() && self.t_w.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("times must be finite and non-negative: t={}, t_w={}", self.t, self.t_w)))
        }
    }

    /// `t/t_w`, undefined for `t_w = 0`.
    pub fn theta(&self) -> Option<f64> {
        (self.t_w > 0.0).then(|| self.t / self.t_w)
    }
}

/// Upper end of the depth integral in `B(δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DepthDomain {
    /// `∫_δ^1`, the finite-`N` model with rates in `(0, 1]`.
    UnitInterval,
    /// `∫_δ^∞`, the rescaled point-process regime.
    HalfLine,
}

/// Constants of the long-time laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgingConstants {
    pub theta: f64,
    /// `A(θ)`, also the Laplace transform `E[e^{−θZ}]` of the scaled depth.
    pub aging: f64,
    /// `π/sin(πα)`, the full Beta integral.
    pub normalizer: f64,
    pub delta: f64,
    pub domain: DepthDomain,
    /// `B(δ)`.
    pub deep_b: f64,
    /// `c(α) = Γ(α)`.
    pub c_alpha: f64,
}

impl AgingConstants {
    /// Limit of `t^{1−α} P(x(t) > δ)`.
    pub fn deep_trap_limit(&self) -> f64 {
        self.deep_b / self.c_alpha
    }
}

/// `π/sin(πα)`.
pub fn beta_normalizer(alpha: f64) -> f64 {
    PI / (PI * alpha).sin()
}

/// `A(θ) = (sin πα/π) ∫_{θ/(1+θ)}^1 u^{−α}(1−u)^{α−1} du`.
pub fn aging_function(alpha: f64, theta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(theta >= 0.0) {
        return Err(Error::invalid("theta must be non-negative"));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    let lower = theta / (1.0 + theta);
    Ok(incomplete_beta_tail(alpha, lower)? / beta_normalizer(alpha))
}

/// `(B(δ), c(α))` with `B(δ) = ∫_δ^{1 or ∞} x^{α−2} dx / (π/sin πα)`.
pub fn deep_trap_constants(alpha: f64, delta: f64, domain: DepthDomain) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(delta > 0.0) || (domain == DepthDomain::UnitInterval && delta > 1.0) {
        return Err(Error::invalid(format!("depth cutoff {delta} outside the domain")));
    }
    let tail = match domain {
        DepthDomain::UnitInterval => (delta.powf(alpha - 1.0) - 1.0) / (1.0 - alpha),
        DepthDomain::HalfLine => delta.powf(alpha - 1.0) / (1.0 - alpha),
    };
    Ok((tail / beta_normalizer(alpha), statrs::function::gamma::gamma(alpha)))
}

pub fn aging_constants(alpha: f64, theta: f64, delta: f64, domain: DepthDomain) -> Result<AgingConstants> {
    let (deep_b, c_alpha) = deep_trap_constants(alpha, delta, domain)?;
    Ok(AgingConstants {
        theta,
        aging: aging_function(alpha, theta)?,
        normalizer: beta_normalizer(alpha),
        delta,
        domain,
        deep_b,
        c_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::beta::beta_reg;

    #[test]
    fn aging_anchor_points() {
        assert_eq!(aging_function(0.5, 0.0).unwrap(), 1.0);
        assert!((aging_function(0.5, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((aging_function(0.5, 3.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(aging_function(0.3, 1e-12).unwrap() > 1.0 - 1e-3);
    }

    #[test]
    fn aging_matches_regularized_beta() {
        for alpha in [0.2, 0.5, 0.8] {
            for theta in [0.01, 0.3, 1.0, 7.0, 100.0] {
                let z = theta / (1.0 + theta);
                let oracle = 1.0 - beta_reg(1.0 - alpha, alpha, z);
                assert!((aging_function(alpha, theta).unwrap() - oracle).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn arcsine_closed_form() {
        for theta in [0.1f64, 0.5, 2.0, 10.0] {
            let exact = 2.0 / PI * (theta / (1.0 + theta)).sqrt().acos();
            assert!((aging_function(0.5, theta).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn deep_trap_values() {
        let (b, c) = deep_trap_constants(0.5, 0.25, DepthDomain::UnitInterval).unwrap();
        assert!((b - 2.0 / PI).abs() < 1e-14);
        assert!((c - PI.sqrt()).abs() < 1e-12);
        let (b, _) = deep_trap_constants(0.5, 0.25, DepthDomain::HalfLine).unwrap();
        assert!((b - 4.0 / PI).abs() < 1e-14);
        assert!(deep_trap_constants(0.5, 2.0, DepthDomain::UnitInterval).is_err());
        assert!(deep_trap_constants(0.5, 2.0, DepthDomain::HalfLine).is_ok());
        assert!((beta_normalizer(0.5) - PI).abs() < 1e-14);
    }

    #[test]
    fn query_validation() {
        assert!(CorrelationQuery::new(-1.0, 1.0).is_err());
        let q = CorrelationQuery::from_ratio(2.0, 5.0).unwrap();
        assert_eq!((q.t, q.theta()), (10.0, Some(2.0)));
        assert_eq!(CorrelationQuery::new(1.0, 0.0).unwrap().theta(), None);
    }
}
