//! Spectral analysis, contour calculus and Monte Carlo for the trap model on
//! the complete graph.
//!
//! A landscape of `N` sites with rates `x[0] < … < x[N-1]` in `(0, 1]` defines a
//! continuous-time walk that leaves site `i` at rate `((N-1)/N) x_i` and jumps
//! to a uniformly chosen other site. The crate computes the exact spectrum of
//! its generator, two-time correlation functions by several independent
//! methods, their large-`N` limits, the Poisson-point-process variant of the
//! model, and the Laplace-transform machinery behind the limiting laws.
//!
//! ```
//! use trapspec::correlation::{aging_function, pi_spectral, CorrelationQuery};
//! use trapspec::landscape::{sample_landscape, LandscapeConfig};
//! use trapspec::spectral::compute_spectrum;
//!
//! let landscape = sample_landscape(&LandscapeConfig::new(0.5, 2_000, 7))?;
//! let spectrum = compute_spectrum(&landscape, 1e-14)?;
//! let finite = pi_spectral(&spectrum, CorrelationQuery::new(1e3, 1e3)?)?;
//! let limit = aging_function(0.5, 1.0)?;
//! assert!((limit - 0.5).abs() < 1e-12);
//! assert!((finite - limit).abs() < 0.2);
//! # Ok::<(), trapspec::Error>(())
//! ```

pub mod cli;
pub mod correlation;
pub mod error;
pub mod landscape;
pub mod montecarlo;
pub mod numeric;
pub mod observable;
pub mod ppp;
pub mod quadrature;
pub mod resolvent;
pub mod rng;
pub mod spectral;
pub mod tauberian;

pub use error::{Error, Result};
pub use landscape::{EnergyLandscape, LandscapeConfig};
pub use num_complex::Complex64;
pub use spectral::SpectralDecomposition;
