//! Expected suprema of canonical processes `t ↦ ⟨ξ, t⟩` over finite index sets.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`index_set`]: finite index sets (explicit, basis families, diagonal cubes,
//!   spin configurations) and their geometric profiles.
//! - [`distribution`]: coordinate laws with declared moments and reproducible
//!   random substreams.
//! - [`gibbs`]: the log-partition soft-max, Gibbs measures, analytic derivative
//!   formulas and their bounds, and the log-Laplace transform.
//! - [`ou`]: the Ornstein–Uhlenbeck semigroup, its generator and potential
//!   operator, and the Stein integral representations.
//! - [`estimator`]: exact and Monte-Carlo estimates of expected suprema.
//! - [`bounds`]: comparison-bound curves, phase-transition thresholds and the
//!   universality / growth experiments.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. The `parallel` feature fans Monte-Carlo replicates out over rayon;
//! results are bit-identical to the sequential path.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod distribution;
pub mod error;
pub mod estimator;
pub mod gibbs;
pub mod index_set;
pub mod math;
pub mod mc;
pub mod ou;
pub mod quadrature;
pub mod stats;

pub use distribution::{CoordinateDistribution, Law, Moments, RandomStream};
pub use error::{Error, Result};
pub use estimator::{Method, SupremumEstimate};
pub use gibbs::{GibbsMeasure, WeightedMeasure};
pub use index_set::{BasisMode, GeometricProfile, IndexSet, SignSubset};
