//! Robust 2-D target localization from range measurements with a known
//! number of outliers.
//!
//! The estimate minimizes the percentile (empirical Value-at-Risk) of the
//! per-anchor range deviations `|y_m - ||x - a_m|||`: the largest deviation
//! left after discarding the `L` worst ones. The objective is non-convex and
//! non-smooth, but every global minimizer lies on a finite union of simple
//! curves (anchor singletons, range circles, and the ellipses and
//! half-hyperbolas where two deviations coincide). [`solver::rpte`] samples
//! that union on a uniform parameter grid and returns the best sample.
//!
//! ```
//! use varloc::{Point2, Scenario, solver};
//!
//! let anchors = vec![
//!     Point2::new(0.0, 0.0),
//!     Point2::new(1.0, 0.0),
//!     Point2::new(0.0, 1.0),
//!     Point2::new(1.0, 1.0),
//! ];
//! let target = Point2::new(0.3, 0.4);
//! let mut ranges: Vec<f64> = anchors.iter().map(|a| target.distance(*a)).collect();
//! ranges[3] += 0.8; // one gross outlier
//! let scenario = Scenario::new(anchors, ranges, 1).unwrap();
//!
//! let estimate = solver::rpte(&scenario, 201).unwrap();
//! assert!(estimate.point.distance(target) < 1e-2);
//! ```

pub mod baselines;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod majorizer;
pub mod percentile;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use percentile::{empirical_var, percentile, scalar_percentile_minimize};
pub use scenario::{atom_deviation, objective, Estimate, Point2, Provenance, Scenario};
