//! Laplace transforms, small-`ω` extraction of the time-domain limit, and
//! Bromwich inversion along a contour folded around the negative axis.
//!
//! If `Ĝ(ω) ~ B ω^{−β}` as `ω → 0` inside the sector `|arg ω| ≤ 3π/4`, with
//! `|Ĝ| ≤ c|ω|^{−γ}` at infinity, then `s^{1−β} G(s) → B/Γ(β)`.

mod bromwich;
mod fit;
mod laplace;

pub use bromwich::{bromwich_invert, BromwichEstimate, BromwichPath};
pub use fit::{tauberian_limit, time_domain_limit, RayFit, SectorGrid, TauberianFit, TauberianProbe};
pub use laplace::{laplace_forward, laplace_forward_analytic, LaplaceOptions};
