//! Non-robust least-squares reference estimators.
//!
//! * `srls` minimizes the squared-range residuals
//!   `sum_m (||x - a_m||^2 - y_m^2)^2` exactly. With `z = (x, ||x||^2)` the
//!   residuals are linear, `A z - b`, and the problem becomes a least-squares
//!   fit under the single quadratic constraint `z^T D z + 2 f^T z = 0`. Its
//!   solution is `z(lambda) = (A^T A + lambda D)^{-1} (A^T b - lambda f)` at the
//!   root of the decreasing secular function
//!   `phi(lambda) = z^T D z + 2 f^T z`, found by bisection.
//! * `gd_rls` runs gradient descent with Armijo backtracking on the range
//!   residuals `sum_m (y_m - ||x - a_m||)^2`, started from the SR-LS estimate.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::scenario::{Estimate, Point2, Provenance, Scenario};

pub const SRLS_SECULAR_TOL: f64 = 1e-10;
pub const SRLS_MAX_BISECTIONS: usize = 200;

/// Relative singular-value threshold below which `A` is rank deficient.
const RANK_TOL: f64 = 1e-10;

pub const GD_DEFAULT_MAX_ITERS: usize = 5000;
pub const GD_DEFAULT_GRAD_TOL: f64 = 1e-8;
const ARMIJO_SLOPE: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const ARMIJO_MAX_HALVINGS: usize = 60;

fn baseline(method: &str) -> Provenance {
    Provenance::Baseline {
        method: method.to_string(),
    }
}

/// Squared-range least-squares estimate.
///
/// Two anchors leave `A` with rank two; the minimum-norm least-squares
/// solution is returned then. Three or more collinear anchors are rejected
/// with [`Error::SolverDegenerate`].
pub fn srls(scenario: &Scenario) -> Result<Estimate> {
    let point = srls_point(scenario)?;
    Ok(Estimate::evaluate(point, scenario, baseline("srls")))
}

fn srls_point(scenario: &Scenario) -> Result<Point2> {
    let m = scenario.len();
    let a = DMatrix::from_fn(m, 3, |r, c| {
        let anchor = scenario.anchors()[r];
        match c {
            0 => -2.0 * anchor.x,
            1 => -2.0 * anchor.y,
            _ => 1.0,
        }
    });
    let b = DVector::from_iterator(
        m,
        scenario
            .ranged_anchors()
            .map(|(anchor, y)| y * y - anchor.norm() * anchor.norm()),
    );

    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if m < 3 || s_min <= RANK_TOL * s_max {
        if m >= 3 {
            return Err(Error::SolverDegenerate(format!(
                "anchors are collinear (singular values {:?})",
                svd.singular_values.as_slice()
            )));
        }
        let z = svd
            .solve(&b, RANK_TOL * s_max)
            .map_err(|e| Error::SolverDegenerate(e.to_string()))?;
        return Ok(Point2::new(z[0], z[1]));
    }

    let ata: Matrix3<f64> = (a.transpose() * &a).fixed_view::<3, 3>(0, 0).into_owned();
    let atb: Vector3<f64> = (a.transpose() * &b).fixed_rows::<3>(0).into_owned();
    let d = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
    let f = Vector3::new(0.0, 0.0, -0.5);

    // phi is decreasing for lambda > -1 / lambda_1, where lambda_1 is the
    // largest eigenvalue of D relative to A^T A; since D only touches x, that
    // is the largest eigenvalue of the leading 2x2 block of (A^T A)^{-1}.
    let inv = ata
        .try_inverse()
        .ok_or_else(|| Error::SolverDegenerate("A^T A is singular".into()))?;
    let block: Matrix2<f64> = inv.fixed_view::<2, 2>(0, 0).into_owned();
    let lambda_1 = SymmetricEigen::new(block).eigenvalues.max();
    let lower = -1.0 / lambda_1;

    let z_at = |lambda: f64| -> Option<Vector3<f64>> { (ata + d * lambda).lu().solve(&(atb - f * lambda)) };
    let phi = |z: &Vector3<f64>| z[0] * z[0] + z[1] * z[1] - z[2];

    // Upper end: the unconstrained solution's side, then doubling.
    let mut hi = lower.max(0.0) + 1.0;
    let mut z_hi = z_at(hi).ok_or_else(|| Error::SolverDegenerate("singular shifted system".into()))?;
    let mut grow = 1.0;
    while phi(&z_hi) > 0.0 {
        grow *= 2.0;
        hi = lower.max(0.0) + grow;
        z_hi = z_at(hi).ok_or_else(|| Error::SolverDegenerate("singular shifted system".into()))?;
        if grow > 1e12 {
            return Err(Error::SolverDegenerate("secular function does not change sign".into()));
        }
    }
    // Lower end: approach the pole until phi turns positive.
    let mut lo = hi;
    let mut found = false;
    for k in 1..=60 {
        lo = lower + (hi - lower) * 0.5f64.powi(k);
        if let Some(z) = z_at(lo) {
            if phi(&z) > 0.0 {
                found = true;
                break;
            }
        }
    }
    if !found {
        // No sign change inside the interval (the degenerate "hard case");
        // the constrained optimum sits at the pole.
        let z = z_at(lo).ok_or_else(|| Error::SolverDegenerate("singular shifted system".into()))?;
        return Ok(Point2::new(z[0], z[1]));
    }

    let mut z = z_hi;
    for _ in 0..SRLS_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        z = z_at(mid).ok_or_else(|| Error::SolverDegenerate("singular shifted system".into()))?;
        let value = phi(&z);
        if value.abs() <= SRLS_SECULAR_TOL || mid == lo || mid == hi {
            break;
        }
        if value > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Point2::new(z[0], z[1]))
}

/// Range least-squares loss `sum_m (y_m - ||x - a_m||)^2`.
pub fn rls_objective(x: Point2, scenario: &Scenario) -> f64 {
    scenario
        .ranged_anchors()
        .map(|(a, y)| {
            let r = y - x.distance(a);
            r * r
        })
        .sum()
}

/// Gradient of [`rls_objective`]; a term whose anchor coincides with `x`
/// contributes zero.
pub fn rls_gradient(x: Point2, scenario: &Scenario) -> Point2 {
    scenario
        .ranged_anchors()
        .fold(Point2::ORIGIN, |acc, (a, y)| {
            let offset = x - a;
            let d = offset.norm();
            if d == 0.0 {
                acc
            } else {
                acc + (-2.0 * (y - d) / d) * offset
            }
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for GdOptions {
    fn default() -> Self {
        Self {
            max_iters: GD_DEFAULT_MAX_ITERS,
            grad_tol: GD_DEFAULT_GRAD_TOL,
        }
    }
}

/// Result of a gradient-descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct GdOutcome {
    pub estimate: Estimate,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Range least-squares loss at the start and after every accepted step.
    pub loss_trace: Vec<f64>,
}

/// Gradient-descent range least-squares estimate started from SR-LS.
pub fn gd_rls(scenario: &Scenario, max_iters: usize, grad_tol: f64) -> Estimate {
    gd_rls_from(scenario, None, &GdOptions { max_iters, grad_tol }).estimate
}

/// Gradient descent from `start`, or from the SR-LS estimate (falling back to
/// the mean anchor when SR-LS is degenerate).
pub fn gd_rls_from(scenario: &Scenario, start: Option<Point2>, options: &GdOptions) -> GdOutcome {
    let mut x = start.unwrap_or_else(|| srls_point(scenario).unwrap_or_else(|_| scenario.mean_anchor()));
    let mut loss = rls_objective(x, scenario);
    let mut trace = vec![loss];
    let mut grad = rls_gradient(x, scenario);
    let mut iterations = 0;

    while iterations < options.max_iters && grad.norm() > options.grad_tol {
        let slope = grad.x * grad.x + grad.y * grad.y;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..ARMIJO_MAX_HALVINGS {
            let trial = x - step * grad;
            let trial_loss = rls_objective(trial, scenario);
            if trial_loss <= loss - ARMIJO_SLOPE * step * slope {
                accepted = Some((trial, trial_loss));
                break;
            }
            step *= ARMIJO_SHRINK;
        }
        let Some((next, next_loss)) = accepted else {
            break;
        };
        x = next;
        loss = next_loss;
        trace.push(loss);
        grad = rls_gradient(x, scenario);
        iterations += 1;
    }

    GdOutcome {
        estimate: Estimate::evaluate(x, scenario, baseline("gd")),
        iterations,
        gradient_norm: grad.norm(),
        loss_trace: trace,
    }
}
