//! Grid estimators: the majorizer-sampling estimator and a dense-lattice
//! reference used to verify it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorizer::{build_majorizer_with, for_each_candidate, norm_bound, MajorizerOptions};
use crate::scenario::{Estimate, ObjectiveEvaluator, Point2, Provenance, Scenario};

/// Grid size used when none is given.
pub const DEFAULT_GRID: usize = 20;

/// Default cap on the number of lattice points [`oracle_grid`] will visit.
pub const DEFAULT_ORACLE_BUDGET: u128 = 100_000_000;

/// Robust percentile target estimate.
///
/// Samples the truncated majorizer set with `grid` points per curve and
/// returns the sample with the lowest objective. Ties go to the earliest
/// candidate in the set's documented order.
pub fn rpte(scenario: &Scenario, grid: usize) -> Result<Estimate> {
    rpte_with(scenario, grid, &MajorizerOptions::default())
}

pub fn rpte_with(scenario: &Scenario, grid: usize, options: &MajorizerOptions) -> Result<Estimate> {
    let set = build_majorizer_with(scenario, options);
    let mut eval = ObjectiveEvaluator::new(scenario);
    let mut best: Option<(f64, Point2, Provenance)> = None;
    for_each_candidate(&set, grid, |cand| {
        let value = eval.eval(cand.point);
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, cand.point, cand.provenance));
        }
    })?;
    let (objective, point, provenance) =
        best.expect("the set always holds one singleton per anchor");
    Ok(Estimate {
        point,
        objective,
        provenance,
    })
}

/// Axis-aligned rectangle in kilometres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min.x <= max.x && min.y <= max.y) {
            return Err(Error::domain(format!("empty or non-finite box {min} .. {max}")));
        }
        Ok(Self { min, max })
    }

    /// The square `[-r, r]^2`.
    pub fn centered_square(radius: f64) -> Result<Self> {
        Self::new(Point2::new(-radius, -radius), Point2::new(radius, radius))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Region to sweep; `None` means the square around the disk
    /// `||x|| <= B(mean anchor)`.
    pub bbox: Option<BBox>,
    pub budget: u128,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            bbox: None,
            budget: DEFAULT_ORACLE_BUDGET,
        }
    }
}

/// Exhaustive lattice search with pitch `h` over the default box.
pub fn oracle_grid(scenario: &Scenario, pitch: f64) -> Result<Estimate> {
    oracle_grid_with(scenario, pitch, &OracleOptions::default())
}

/// Exhaustive lattice search.
///
/// Evaluates the objective at `min + (col h, row h)` for every lattice point
/// inside the box and returns the best one; ties go to the first point in
/// row-major order. Lattices with pitches `h` and `h / 2` over the same box
/// are nested, so halving the pitch never makes the result worse.
pub fn oracle_grid_with(scenario: &Scenario, pitch: f64, options: &OracleOptions) -> Result<Estimate> {
    if !(pitch > 0.0 && pitch.is_finite()) {
        return Err(Error::domain(format!("lattice pitch must be positive, got {pitch}")));
    }
    let bbox = match options.bbox {
        Some(b) => b,
        None => BBox::centered_square(norm_bound(scenario, scenario.mean_anchor()))?,
    };
    let cols = ((bbox.max.x - bbox.min.x) / pitch).floor() as u128 + 1;
    let rows = ((bbox.max.y - bbox.min.y) / pitch).floor() as u128 + 1;
    let needed = cols.saturating_mul(rows);
    if needed > options.budget {
        return Err(Error::Resource {
            needed,
            budget: options.budget,
        });
    }
    let (cols, rows) = (cols as usize, rows as usize);
    let lattice = |row: usize, col: usize| {
        Point2::new(bbox.min.x + col as f64 * pitch, bbox.min.y + row as f64 * pitch)
    };

    // Per-row minima, reduced in row order so the result does not depend on
    // scheduling.
    let row_best: Vec<(f64, usize)> = (0..rows)
        .into_par_iter()
        .map_init(
            || ObjectiveEvaluator::new(scenario),
            |eval, row| {
                let mut best = (f64::INFINITY, 0);
                for col in 0..cols {
                    let v = eval.eval(lattice(row, col));
                    if v < best.0 {
                        best = (v, col);
                    }
                }
                best
            },
        )
        .collect();

    let (row, &(objective, col)) = row_best
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &(f64, usize))>, (r, cand)| match acc {
            Some((_, best)) if best.0 <= cand.0 => acc,
            _ => Some((r, cand)),
        })
        .expect("lattice has at least one row");
    Ok(Estimate {
        point: lattice(row, col),
        objective,
        provenance: Provenance::Oracle { row, col },
    })
}
