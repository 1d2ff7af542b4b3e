//! Quadrature engine: adaptive Gauss–Kronrod on intervals, closed contours
//! around the spectrum, and integrals with power-law endpoint singularities.

pub mod contour;
pub mod kronrod;
pub mod singular;

pub use contour::{
    contour_integrate, default_left_margin, truncation_bound, truncation_for_tolerance, ContourEstimate, ContourKind,
    ContourSpec, TRUNCATION_CONSTANT,
};
pub use kronrod::{integrate, integrate_real, Estimate, Tolerance};
pub use singular::{ex_integral, incomplete_beta_tail, SingularIntegralSpec};
