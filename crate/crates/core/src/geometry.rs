//! Conic pieces of the equal-deviation sets.
//!
//! For anchors `a_hi`, `a_lo` with ranges `y_hi >= y_lo`, the points where the
//! two deviations agree are the ellipse `d_hi + d_lo = y_hi + y_lo` and the
//! half-hyperbola `d_hi - d_lo = y_hi - y_lo` (the branch nearer `a_lo`).
//! Either piece may be empty. A [`LocalFrame`] translates the anchor midpoint
//! to the origin and rotates `a_lo` onto the positive x-axis, where both
//! curves take their textbook parametric forms with foci `(-c, 0)` (`a_hi`)
//! and `(c, 0)` (`a_lo`).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{Point2, Scenario};

/// Anchors closer than this are treated as coincident.
pub const COINCIDENT_ANCHOR_TOL: f64 = 1e-12;

/// Translation and rotation putting one anchor pair in standard position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFrame {
    /// Midpoint of the two anchors.
    pub center: Point2,
    /// Polar angle of `a_lo - center`, in `(-pi, pi]`.
    pub angle: f64,
    /// Half the anchor separation.
    pub c: f64,
    /// `y_hi + y_lo`, the ellipse's distance sum.
    pub k_e: f64,
    /// `y_hi - y_lo`, the half-hyperbola's distance difference.
    pub k_h: f64,
    /// Index of the anchor with the larger measurement.
    pub idx_hi: usize,
    /// Index of the anchor with the smaller measurement.
    pub idx_lo: usize,
    pub anchor_hi: Point2,
    pub anchor_lo: Point2,
    // Unit vector along `a_lo - center`; the first column of the rotation.
    axis: Point2,
}

/// Which conic pieces make up a pair's equal-deviation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCase {
    /// Anchors close together relative to the range difference: `2c < k_H`.
    EllipseOnly,
    /// Anchors far apart relative to the range sum: `2c > k_E`.
    HyperbolaOnly,
    /// `k_H <= 2c <= k_E`.
    Both,
}

impl PairCase {
    pub fn has_ellipse(self) -> bool {
        matches!(self, PairCase::EllipseOnly | PairCase::Both)
    }

    pub fn has_hyperbola(self) -> bool {
        matches!(self, PairCase::HyperbolaOnly | PairCase::Both)
    }
}

/// One piece of the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveComponent {
    Singleton { anchor: usize, point: Point2 },
    Circle { anchor: usize, center: Point2, radius: f64 },
    Ellipse { frame: LocalFrame },
    /// Half-hyperbola restricted to parameters `|t| <= bound`.
    HalfHyperbola { frame: LocalFrame, bound: f64 },
}

/// Builds the frame for anchors `a1`, `a2` with ranges `y1`, `y2`.
///
/// The anchor with the larger range becomes the `hi` anchor (index 0 for
/// `a1`, 1 for `a2`; `a1` wins ties).
pub fn build_local_frame(a1: Point2, a2: Point2, y1: f64, y2: f64) -> Result<LocalFrame> {
    LocalFrame::from_ranged((0, a1, y1), (1, a2, y2))
}

impl LocalFrame {
    /// Frame for anchors `i` and `j` of a scenario.
    pub fn for_pair(scenario: &Scenario, i: usize, j: usize) -> Result<Self> {
        let a = scenario.anchors();
        let y = scenario.measurements();
        Self::from_ranged((i, a[i], y[i]), (j, a[j], y[j]))
    }

    fn from_ranged(first: (usize, Point2, f64), second: (usize, Point2, f64)) -> Result<Self> {
        if !(first.2 >= 0.0 && second.2 >= 0.0) {
            return Err(Error::domain(format!(
                "ranges must be non-negative, got {} and {}",
                first.2, second.2
            )));
        }
        let (hi, lo) = if first.2 >= second.2 {
            (first, second)
        } else {
            (second, first)
        };
        let separation = hi.1.distance(lo.1);
        if separation < COINCIDENT_ANCHOR_TOL {
            return Err(Error::DegeneratePair { separation });
        }

        let center = 0.5 * (hi.1 + lo.1);
        let offset = lo.1 - center;
        let c = offset.norm();
        let axis = (1.0 / c) * offset;
        let mut angle = offset.y.atan2(offset.x);
        if angle <= -PI {
            angle = PI;
        }
        Ok(Self {
            center,
            angle,
            c,
            k_e: hi.2 + lo.2,
            k_h: hi.2 - lo.2,
            idx_hi: hi.0,
            idx_lo: lo.0,
            anchor_hi: hi.1,
            anchor_lo: lo.1,
            axis,
        })
    }

    /// Rotates a local vector into world orientation (no translation).
    #[inline]
    pub fn rotate(&self, v: Point2) -> Point2 {
        let (cos, sin) = (self.axis.x, self.axis.y);
        Point2::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y)
    }

    /// Maps local coordinates to world coordinates: `center + R v`.
    #[inline]
    pub fn to_world(&self, v: Point2) -> Point2 {
        self.center + self.rotate(v)
    }

    /// Inverse of [`LocalFrame::to_world`].
    pub fn to_local(&self, p: Point2) -> Point2 {
        let d = p - self.center;
        let (cos, sin) = (self.axis.x, self.axis.y);
        Point2::new(cos * d.x + sin * d.y, -sin * d.x + cos * d.y)
    }

    /// Semi-minor axis of the ellipse, `sqrt(k_E^2/4 - c^2)`.
    fn ellipse_minor(&self) -> f64 {
        (0.25 * self.k_e * self.k_e - self.c * self.c).max(0.0).sqrt()
    }

    /// Imaginary semi-axis of the hyperbola, `sqrt(c^2 - k_H^2/4)`.
    fn hyperbola_minor(&self) -> f64 {
        (self.c * self.c - 0.25 * self.k_h * self.k_h).max(0.0).sqrt()
    }

    #[inline]
    pub(crate) fn ellipse_point_unchecked(&self, theta: f64) -> Point2 {
        let (sin, cos) = theta.sin_cos();
        self.to_world(Point2::new(0.5 * self.k_e * cos, self.ellipse_minor() * sin))
    }

    #[inline]
    pub(crate) fn hyperbola_point_unchecked(&self, t: f64) -> Point2 {
        self.to_world(Point2::new(0.5 * self.k_h * t.cosh(), self.hyperbola_minor() * t.sinh()))
    }
}

pub fn classify_pair(frame: &LocalFrame) -> PairCase {
    let two_c = 2.0 * frame.c;
    if two_c < frame.k_h {
        PairCase::EllipseOnly
    } else if two_c > frame.k_e {
        PairCase::HyperbolaOnly
    } else {
        PairCase::Both
    }
}

/// Point of the pair's ellipse at angle `theta`.
pub fn ellipse_point(frame: &LocalFrame, theta: f64) -> Result<Point2> {
    if 2.0 * frame.c > frame.k_e {
        return Err(Error::domain(format!(
            "ellipse needs 2c <= k_E, got 2c = {} > {}",
            2.0 * frame.c,
            frame.k_e
        )));
    }
    Ok(frame.ellipse_point_unchecked(theta))
}

/// Point of the pair's half-hyperbola at parameter `t`.
pub fn hyperbola_point(frame: &LocalFrame, t: f64) -> Result<Point2> {
    if !(frame.c > 0.0) || frame.k_h > 2.0 * frame.c {
        return Err(Error::domain(format!(
            "half-hyperbola needs 0 < c and k_H <= 2c, got c = {}, k_H = {}",
            frame.c, frame.k_h
        )));
    }
    Ok(frame.hyperbola_point_unchecked(t))
}

#[inline]
pub fn circle_point(center: Point2, radius: f64, theta: f64) -> Point2 {
    debug_assert!(radius >= 0.0);
    let (sin, cos) = theta.sin_cos();
    center + radius * Point2::new(cos, sin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::atom_deviation;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn frame(c: f64, k_e: f64, k_h: f64) -> LocalFrame {
        // anchors on the x-axis around the origin with the requested constants
        let y_hi = 0.5 * (k_e + k_h);
        let y_lo = 0.5 * (k_e - k_h);
        build_local_frame(Point2::new(-c, 0.0), Point2::new(c, 0.0), y_hi, y_lo).unwrap()
    }

    #[test]
    fn frame_examples() {
        let f = build_local_frame(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 3.0, 1.0).unwrap();
        assert_eq!(f.center, Point2::ORIGIN);
        assert_eq!((f.c, f.k_e, f.k_h, f.angle), (1.0, 4.0, 2.0, 0.0));
        assert_eq!((f.idx_hi, f.idx_lo), (0, 1));

        let f = build_local_frame(Point2::new(0.0, -1.0), Point2::new(0.0, 1.0), 2.0, 2.0).unwrap();
        assert_eq!(f.center, Point2::ORIGIN);
        assert_eq!((f.c, f.k_e, f.k_h), (1.0, 4.0, 0.0));
        assert_abs_diff_eq!(f.angle, PI / 2.0, epsilon = 1e-15);

        let err = build_local_frame(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0), 1.0, 2.0);
        assert!(matches!(err, Err(Error::DegeneratePair { .. })));
    }

    #[test]
    fn frame_swaps_to_put_larger_range_first() {
        let f = build_local_frame(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0), 1.0, 3.0).unwrap();
        assert_eq!((f.idx_hi, f.idx_lo), (1, 0));
        assert_eq!(f.k_h, 2.0);
        // a_lo = (-1, 0) now sits on the positive local axis
        assert_abs_diff_eq!(f.angle, PI, epsilon = 1e-15);
    }

    #[test]
    fn angle_range_excludes_minus_pi() {
        let f = build_local_frame(Point2::new(1.0, -0.0), Point2::new(-1.0, -0.0), 1.0, 1.0).unwrap();
        assert!(f.angle > -PI && f.angle <= PI);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pair(&frame(1.0, 4.0, 2.0)), PairCase::Both);
        assert_eq!(classify_pair(&frame(3.0, 4.0, 2.0)), PairCase::HyperbolaOnly);
        assert_eq!(classify_pair(&frame(0.5, 4.0, 2.0)), PairCase::EllipseOnly);
        // closed interval at both ends
        assert_eq!(classify_pair(&frame(1.0, 2.0, 2.0)), PairCase::Both);
    }

    #[test]
    fn ellipse_examples() {
        let f = frame(1.0, 4.0, 2.0);
        let p = ellipse_point(&f, 0.0).unwrap();
        assert_abs_diff_eq!(p.x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-15);
        let p = ellipse_point(&f, PI / 2.0).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 3f64.sqrt(), epsilon = 1e-15);
        assert!(ellipse_point(&frame(3.0, 4.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn hyperbola_examples() {
        let f = frame(1.0, 4.0, 0.0);
        assert_eq!(hyperbola_point(&f, 0.0).unwrap(), Point2::ORIGIN);
        let f = frame(2.0, 6.0, 2.0);
        assert_eq!(hyperbola_point(&f, 0.0).unwrap(), Point2::new(1.0, 0.0));
        assert!(hyperbola_point(&frame(0.5, 4.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn hyperbola_branch_is_near_low_anchor() {
        let f = frame(2.0, 6.0, 2.0);
        for t in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            let p = hyperbola_point(&f, t).unwrap();
            let diff = p.distance(f.anchor_hi) - p.distance(f.anchor_lo);
            assert_abs_diff_eq!(diff, f.k_h, epsilon = 1e-12);
        }
    }

    #[test]
    fn circle_examples() {
        let p = circle_point(Point2::ORIGIN, 1.0, 0.0);
        assert_eq!(p, Point2::new(1.0, 0.0));
        assert_eq!(circle_point(Point2::new(2.0, 3.0), 0.0, 1.234), Point2::new(2.0, 3.0));
        let p = circle_point(Point2::new(1.0, 0.0), 2.0, PI);
        assert_abs_diff_eq!(p.x, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-15);
    }

    fn point() -> impl Strategy<Value = Point2> {
        (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn frame_is_an_isometry(a1 in point(), a2 in point(), y1 in 0.0..5.0f64, y2 in 0.0..5.0f64, v in point()) {
            prop_assume!(a1.distance(a2) > 1e-6);
            let f = build_local_frame(a1, a2, y1, y2).unwrap();
            prop_assert!((f.rotate(v).norm() - v.norm()).abs() <= 1e-12);
            prop_assert!(f.to_world(Point2::new(-f.c, 0.0)).distance(f.anchor_hi) <= 1e-12);
            prop_assert!(f.to_world(Point2::new(f.c, 0.0)).distance(f.anchor_lo) <= 1e-12);
            prop_assert!(f.to_local(f.to_world(v)).distance(v) <= 1e-12);
            prop_assert!(f.k_h >= 0.0 && f.k_h <= f.k_e);
        }

        #[test]
        fn cases_partition(c in 1e-6..5.0f64, k_e in 0.0..10.0f64, frac in 0.0..=1.0f64) {
            let f = frame(c, k_e, frac * k_e);
            let two_c = 2.0 * f.c;
            let hits = [two_c < f.k_h, two_c > f.k_e, f.k_h <= two_c && two_c <= f.k_e];
            prop_assert_eq!(hits.iter().filter(|h| **h).count(), 1);
            let case = classify_pair(&f);
            prop_assert_eq!(case.has_ellipse(), two_c <= f.k_e);
            prop_assert_eq!(case.has_hyperbola(), two_c >= f.k_h);
        }

        #[test]
        fn curve_samples_equalize_deviations(
            a1 in point(), a2 in point(),
            y1 in 0.0..5.0f64, y2 in 0.0..5.0f64,
            theta in 0.0..(2.0 * PI), t in -3.0..3.0f64,
        ) {
            prop_assume!(a1.distance(a2) > 1e-3);
            let f = build_local_frame(a1, a2, y1, y2).unwrap();
            let case = classify_pair(&f);
            let residual = |p: Point2| (atom_deviation(p, a1, y1) - atom_deviation(p, a2, y2)).abs();
            if case.has_ellipse() {
                prop_assert!(residual(ellipse_point(&f, theta).unwrap()) <= 1e-9);
            }
            if case.has_hyperbola() {
                prop_assert!(residual(hyperbola_point(&f, t).unwrap()) <= 1e-9);
            }
        }

        #[test]
        fn circle_samples_on_circle(center in point(), radius in 0.0..1e3f64, theta in 0.0..(2.0 * PI)) {
            let p = circle_point(center, radius, theta);
            prop_assert!((p.distance(center) - radius).abs() <= 1e-12);
        }
    }
}
