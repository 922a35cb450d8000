//! Problem instances and the percentile objective.
//!
//! All lengths are kilometres.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percentile::percentile_in_place;

/// A point or displacement in the plane, in kilometres.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, rhs: Point2) -> Point2 {
        Point2::new(self * rhs.x, self * rhs.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// `|y - ||x - a|||`, the deviation of point `x` from anchor `a`'s range
/// circle of radius `y`.
#[inline]
pub fn atom_deviation(x: Point2, anchor: Point2, range: f64) -> f64 {
    (range - x.distance(anchor)).abs()
}

/// A localization instance: anchor positions, one range measurement per
/// anchor, and the number `L` of measurements to treat as outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    anchors: Vec<Point2>,
    measurements: Vec<f64>,
    outlier_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    anchors: Vec<Point2>,
    measurements: Vec<f64>,
    outlier_count: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.anchors, raw.measurements, raw.outlier_count)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            anchors: s.anchors,
            measurements: s.measurements,
            outlier_count: s.outlier_count,
        }
    }
}

impl Scenario {
    /// Validates and builds a scenario.
    ///
    /// Requires at least two anchors, one finite non-negative measurement per
    /// anchor, finite anchor coordinates and `outlier_count < M`.
    pub fn new(anchors: Vec<Point2>, measurements: Vec<f64>, outlier_count: usize) -> Result<Self> {
        let m = anchors.len();
        if m < 2 {
            return Err(Error::domain(format!("need at least 2 anchors, got {m}")));
        }
        if measurements.len() != m {
            return Err(Error::domain(format!(
                "{} measurements for {m} anchors",
                measurements.len()
            )));
        }
        if let Some((i, a)) = anchors.iter().enumerate().find(|(_, a)| !a.is_finite()) {
            return Err(Error::domain(format!("anchor {i} is not finite: {a}")));
        }
        if let Some((i, y)) = measurements
            .iter()
            .enumerate()
            .find(|(_, y)| !y.is_finite() || **y < 0.0)
        {
            return Err(Error::domain(format!(
                "measurement {i} must be finite and non-negative, got {y}"
            )));
        }
        if outlier_count >= m {
            return Err(Error::domain(format!(
                "outlier count {outlier_count} must be at most M - 1 = {}",
                m - 1
            )));
        }
        Ok(Self {
            anchors,
            measurements,
            outlier_count,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("scenario serialization is infallible")
    }

    pub fn anchors(&self) -> &[Point2] {
        &self.anchors
    }

    pub fn measurements(&self) -> &[f64] {
        &self.measurements
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier_count
    }

    /// Number of anchors `M`.
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Same data with a different outlier count.
    pub fn with_outlier_count(&self, outlier_count: usize) -> Result<Self> {
        Self::new(self.anchors.clone(), self.measurements.clone(), outlier_count)
    }

    /// Arithmetic mean of the anchor positions.
    pub fn mean_anchor(&self) -> Point2 {
        let n = self.anchors.len() as f64;
        let sum = self
            .anchors
            .iter()
            .fold(Point2::ORIGIN, |acc, &a| acc + a);
        (1.0 / n) * sum
    }

    /// Iterator over `(anchor, measurement)` pairs.
    pub fn ranged_anchors(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.anchors.iter().copied().zip(self.measurements.iter().copied())
    }
}

/// `p_L{|y_m - ||x - a_m|||}`, the percentile of the range deviations at `x`.
pub fn objective(x: Point2, scenario: &Scenario) -> f64 {
    ObjectiveEvaluator::new(scenario).eval(x)
}

/// Reusable objective evaluation with a private scratch buffer.
///
/// Produces bit-identical values to [`objective`].
#[derive(Debug, Clone)]
pub struct ObjectiveEvaluator<'a> {
    scenario: &'a Scenario,
    scratch: Vec<f64>,
}

impl<'a> ObjectiveEvaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        Self {
            scenario,
            scratch: vec![0.0; scenario.len()],
        }
    }

    #[inline]
    pub fn eval(&mut self, x: Point2) -> f64 {
        for (slot, (a, y)) in self.scratch.iter_mut().zip(self.scenario.ranged_anchors()) {
            *slot = atom_deviation(x, a, y);
        }
        percentile_in_place(&mut self.scratch, self.scenario.outlier_count)
    }
}

/// Where an estimate came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// An anchor position.
    Singleton { anchor: usize },
    /// A sample of an anchor's range circle.
    Circle { anchor: usize, grid_index: usize },
    /// A sample of the equal-deviation ellipse of anchors `i < j`.
    Ellipse { i: usize, j: usize, grid_index: usize },
    /// A sample of the truncated equal-deviation half-hyperbola of `i < j`.
    HalfHyperbola { i: usize, j: usize, grid_index: usize },
    /// A lattice point of the dense verification grid.
    Oracle { row: usize, col: usize },
    /// A reference estimator.
    Baseline { method: String },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Singleton { anchor } => write!(f, "singleton[{anchor}]"),
            Provenance::Circle { anchor, grid_index } => write!(f, "circle[{anchor}]#{grid_index}"),
            Provenance::Ellipse { i, j, grid_index } => write!(f, "ellipse[{i},{j}]#{grid_index}"),
            Provenance::HalfHyperbola { i, j, grid_index } => {
                write!(f, "half_hyperbola[{i},{j}]#{grid_index}")
            }
            Provenance::Oracle { row, col } => write!(f, "oracle[{row},{col}]"),
            Provenance::Baseline { method } => write!(f, "{method}"),
        }
    }
}

/// A location estimate with its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(rename = "point_km")]
    pub point: Point2,
    /// `objective(point, scenario)` for the scenario that produced it.
    #[serde(rename = "objective_km")]
    pub objective: f64,
    pub provenance: Provenance,
}

impl Estimate {
    /// Scores `point` against `scenario`.
    pub fn evaluate(point: Point2, scenario: &Scenario, provenance: Provenance) -> Self {
        Self {
            point,
            objective: objective(point, scenario),
            provenance,
        }
    }
}
