//! The candidate set that contains every global minimizer of the percentile
//! objective, and its uniform discretization.
//!
//! The set is the union of the anchors, their range circles, and for every
//! anchor pair the ellipse and/or half-hyperbola on which the two deviations
//! agree. Half-hyperbolas are unbounded; they are cut to parameters
//! `|t| <= U`, with `U` chosen from a norm bound on the minimizers so the cut
//! never removes one.

use std::f64::consts::TAU;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{circle_point, classify_pair, CurveComponent, LocalFrame};
use crate::percentile::percentile_in_place;
use crate::scenario::{atom_deviation, Point2, Provenance, Scenario};

/// Ranges at or below this are treated as zero-radius circles and dropped.
pub const ZERO_RADIUS_TOL: f64 = 1e-12;

/// A pair left out of the set, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedPair {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorizerSet {
    /// Ordered: singletons by anchor, circles by anchor, then pairs in
    /// lexicographic order with the ellipse before the half-hyperbola.
    pub components: Vec<CurveComponent>,
    /// Norm bound `B` on every minimizer.
    pub norm_bound: f64,
    /// Reference point the norm bound was computed at.
    pub anchor_ref: Point2,
    pub skipped_pairs: Vec<SkippedPair>,
}

/// Knobs for [`build_majorizer_with`]. The defaults reproduce
/// [`build_majorizer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorizerOptions {
    /// Point at which the norm bound is evaluated; `None` uses the mean anchor.
    pub reference: Option<Point2>,
    /// Multiplier applied to every truncation bound `U`.
    pub truncation_scale: f64,
}

impl Default for MajorizerOptions {
    fn default() -> Self {
        Self {
            reference: None,
            truncation_scale: 1.0,
        }
    }
}

/// A discretized point of the set, tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub point: Point2,
    pub provenance: Provenance,
}

/// `B(x_ref) = p_L{|y_m - ||x_ref - a_m|||} + max_m (||a_m|| + y_m)`.
///
/// Any minimizer `x*` of the objective has `||x*|| <= B(x_ref)`, whatever the
/// reference point.
pub fn norm_bound(scenario: &Scenario, reference: Point2) -> f64 {
    let mut deviations: Vec<f64> = scenario
        .ranged_anchors()
        .map(|(a, y)| atom_deviation(reference, a, y))
        .collect();
    let at_reference = percentile_in_place(&mut deviations, scenario.outlier_count());
    let reach = scenario
        .ranged_anchors()
        .map(|(a, y)| a.norm() + y)
        .fold(f64::NEG_INFINITY, f64::max);
    at_reference + reach
}

/// Parameter bound `U` for a pair's half-hyperbola.
///
/// A hyperbola point at parameter `t` has local norm
/// `sqrt(c^2 cosh^2 t - (c^2 - k_H^2/4))`; capping it at `B + c + ||a_lo||`
/// gives `cosh t <= U_hat` with
/// `U_hat = sqrt(((B + c + ||a_lo||)^2 + c^2 - k_H^2/4) / c^2)`, so
/// `U = log(U_hat + sqrt(U_hat^2 - 1))`.
pub fn truncation_bound(frame: &LocalFrame, norm_bound: f64) -> Result<f64> {
    let c = frame.c;
    if !(c > 0.0) {
        return Err(Error::domain(format!("truncation bound needs c > 0, got {c}")));
    }
    if frame.k_h > 2.0 * c {
        return Err(Error::domain(format!(
            "truncation bound needs k_H <= 2c, got k_H = {}, c = {c}",
            frame.k_h
        )));
    }
    if !(norm_bound >= 0.0) {
        return Err(Error::domain(format!("norm bound must be >= 0, got {norm_bound}")));
    }
    let reach = norm_bound + c + frame.anchor_lo.norm();
    let minor_sq = c * c - 0.25 * frame.k_h * frame.k_h;
    let u_hat = ((reach * reach + minor_sq) / (c * c)).sqrt();
    debug_assert!(u_hat >= 1.0 - 1e-12, "U_hat = {u_hat} < 1");
    let u_hat = u_hat.max(1.0);
    Ok((u_hat + (u_hat * u_hat - 1.0).sqrt()).ln())
}

/// Builds the truncated candidate set with the norm bound taken at the mean
/// anchor.
pub fn build_majorizer(scenario: &Scenario) -> MajorizerSet {
    build_majorizer_with(scenario, &MajorizerOptions::default())
}

pub fn build_majorizer_with(scenario: &Scenario, options: &MajorizerOptions) -> MajorizerSet {
    let anchors = scenario.anchors();
    let ranges = scenario.measurements();
    let m = scenario.len();
    let anchor_ref = options.reference.unwrap_or_else(|| scenario.mean_anchor());
    let bound = norm_bound(scenario, anchor_ref);

    let mut components = Vec::with_capacity(2 * m + m * (m - 1));
    components.extend(
        anchors
            .iter()
            .enumerate()
            .map(|(anchor, &point)| CurveComponent::Singleton { anchor, point }),
    );
    components.extend(
        anchors
            .iter()
            .zip(ranges)
            .enumerate()
            .filter(|(_, (_, &y))| y > ZERO_RADIUS_TOL)
            .map(|(anchor, (&center, &radius))| CurveComponent::Circle {
                anchor,
                center,
                radius,
            }),
    );

    let mut skipped_pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let frame = match LocalFrame::for_pair(scenario, i, j) {
                Ok(frame) => frame,
                Err(err) => {
                    skipped_pairs.push(SkippedPair {
                        i,
                        j,
                        reason: err.to_string(),
                    });
                    continue;
                }
            };
            let case = classify_pair(&frame);
            if case.has_ellipse() {
                components.push(CurveComponent::Ellipse { frame });
            }
            if case.has_hyperbola() {
                let bound = truncation_bound(&frame, bound)
                    .expect("frame classified with a hyperbola satisfies the bound preconditions");
                components.push(CurveComponent::HalfHyperbola {
                    frame,
                    bound: bound * options.truncation_scale,
                });
            }
        }
    }

    MajorizerSet {
        components,
        norm_bound: bound,
        anchor_ref,
        skipped_pairs,
    }
}

impl MajorizerSet {
    /// Number of candidates [`discretize`] will emit for grid size `g`.
    pub fn candidate_count(&self, grid: usize) -> usize {
        self.components
            .iter()
            .map(|c| match c {
                CurveComponent::Singleton { .. } => 1,
                _ => grid,
            })
            .sum()
    }
}

fn pair_indices(frame: &LocalFrame) -> (usize, usize) {
    (frame.idx_hi.min(frame.idx_lo), frame.idx_hi.max(frame.idx_lo))
}

/// Samples every component of `set` on `grid` uniformly spaced parameters.
///
/// Closed curves use `theta_g = 2 pi g / (G - 1)` and half-hyperbolas
/// `t_g = -U + 2 U g / (G - 1)` for `g = 0..G`, so the first and last sample
/// of a closed curve coincide. Output order follows the component order.
pub fn discretize(set: &MajorizerSet, grid: usize) -> Result<Vec<Candidate>> {
    let mut out = Vec::with_capacity(set.candidate_count(grid.max(2)));
    for_each_candidate(set, grid, |c| out.push(c))?;
    Ok(out)
}

/// Streaming form of [`discretize`].
pub fn for_each_candidate(
    set: &MajorizerSet,
    grid: usize,
    mut visit: impl FnMut(Candidate),
) -> Result<()> {
    if grid < 2 {
        return Err(Error::domain(format!("grid size must be at least 2, got {grid}")));
    }
    let steps = (grid - 1) as f64;
    let angle = |g: usize| TAU * g as f64 / steps;

    for component in &set.components {
        match *component {
            CurveComponent::Singleton { anchor, point } => visit(Candidate {
                point,
                provenance: Provenance::Singleton { anchor },
            }),
            CurveComponent::Circle {
                anchor,
                center,
                radius,
            } => {
                for g in 0..grid {
                    visit(Candidate {
                        point: circle_point(center, radius, angle(g)),
                        provenance: Provenance::Circle { anchor, grid_index: g },
                    });
                }
            }
            CurveComponent::Ellipse { ref frame } => {
                let (i, j) = pair_indices(frame);
                for g in 0..grid {
                    visit(Candidate {
                        point: frame.ellipse_point_unchecked(angle(g)),
                        provenance: Provenance::Ellipse { i, j, grid_index: g },
                    });
                }
            }
            CurveComponent::HalfHyperbola { ref frame, bound } => {
                let (i, j) = pair_indices(frame);
                for g in 0..grid {
                    let t = -bound + 2.0 * bound * g as f64 / steps;
                    visit(Candidate {
                        point: frame.hyperbola_point_unchecked(t),
                        provenance: Provenance::HalfHyperbola { i, j, grid_index: g },
                    });
                }
            }
        }
    }
    Ok(())
}

/// Writes candidates as CSV with header
/// `component_kind,pair_i,pair_j,grid_index,x_km,y_km`.
///
/// Singletons and circles put their anchor in `pair_i` and leave `pair_j`
/// empty; singletons also leave `grid_index` empty.
pub fn write_candidates_csv<W: Write>(mut out: W, candidates: &[Candidate]) -> std::io::Result<()> {
    writeln!(out, "component_kind,pair_i,pair_j,grid_index,x_km,y_km")?;
    for c in candidates {
        let p = c.point;
        match &c.provenance {
            Provenance::Singleton { anchor } => {
                writeln!(out, "singleton,{anchor},,,{},{}", p.x, p.y)?
            }
            Provenance::Circle { anchor, grid_index } => {
                writeln!(out, "circle,{anchor},,{grid_index},{},{}", p.x, p.y)?
            }
            Provenance::Ellipse { i, j, grid_index } => {
                writeln!(out, "ellipse,{i},{j},{grid_index},{},{}", p.x, p.y)?
            }
            Provenance::HalfHyperbola { i, j, grid_index } => {
                writeln!(out, "half_hyperbola,{i},{j},{grid_index},{},{}", p.x, p.y)?
            }
            other => writeln!(out, "{other},,,,{},{}", p.x, p.y)?,
        }
    }
    Ok(())
}
