//! Certified lower bounds for subharmonic functions.
//!
//! A subharmonic function `u` on a domain `G` with `u(o) = 0` admits explicit
//! pointwise lower bounds in terms of three ingredients: the Harnack distance
//! from the base point, the radial counting function of the Riesz measure of
//! `u`, and (for bounds that survive on most of a subset) the Hausdorff
//! content of a small exceptional set. This crate computes every ingredient
//! with a known sidedness, so that each reported inequality margin is a
//! genuine consequence of the underlying theorem rather than an artifact of
//! sampling error:
//!
//! * quantities that enter a right-hand side destructively (boundary sups,
//!   Harnack distances, domain diameters) are computed as certified upper
//!   bounds,
//! * quantities that enter protectively (boundary gaps, inradii) as certified
//!   lower bounds,
//! * Monte Carlo estimates carry confidence half-widths and downgrade the
//!   verdict from `pass` to `pass_with_mc`.
//!
//! The crate is organised bottom-up: [`kernel`] holds the radial kernel and
//! dimensional constants, [`domain`] the geometry, [`riesz`] atomic measures
//! and counting functions, [`harnack`] exact and chained Harnack distances,
//! [`green`] Green functions, harmonic measure, and walk-on-spheres
//! estimators, [`hausdorff`] gauges, contents, and bounded-multiplicity
//! covers, [`testbed`] subharmonic functions with known Riesz measures, and
//! [`engine`] the inequality checks themselves. [`scenario`] reads the JSON
//! scenario format consumed by the CLI.

pub mod domain;
pub mod engine;
pub mod error;
pub mod extreal;
pub mod green;
pub mod harnack;
pub mod hausdorff;
pub mod kernel;
pub mod numeric;
pub mod riesz;
pub mod scenario;
pub mod testbed;

pub use domain::{Ball, Domain, Interval, NestedPair, Point, SdfDomain, Shape};
pub use engine::{CheckKind, MarginReport, Scenario, SuiteSummary, Verdict};
pub use error::Error;
pub use extreal::ExtReal;
pub use green::{EstimatorParams, GreenEstimate, HarmonicMeasure, WalkBudget};
pub use harnack::{BoundKind, HarnackValue};
pub use hausdorff::{ContentBound, Gauge};
pub use riesz::AtomicMeasure;
pub use testbed::TestFunction;

/// Shared result alias; every fallible public operation reports [`Error`].
pub type Result<T> = std::result::Result<T, Error>;
