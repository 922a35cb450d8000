//! Order-statistic objectives: the percentile `p_L`, its empirical
//! Value-at-Risk reading, and the exact scalar minimizer.

use crate::error::{Error, Result};

/// Tolerance on `(1 - beta) * M` being an integer.
const BETA_INTEGRALITY_TOL: f64 = 1e-9;

/// Returns `p_L(z)`, the `(L+1)`-th largest entry of `z`.
///
/// Equivalently the maximum of `z` once its `L` largest entries are
/// discarded, so `p_0` is the maximum and `p_{M-1}` the minimum. Ties are
/// counted with multiplicity; the result is always an element of `z`.
pub fn percentile(z: &[f64], outliers: usize) -> Result<f64> {
    check_rank(z.len(), outliers)?;
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("percentile input contains {bad}")));
    }
    let mut scratch = z.to_vec();
    Ok(percentile_in_place(&mut scratch, outliers))
}

/// Selection kernel shared by every objective evaluation.
///
/// Reorders `z`. The caller guarantees `outliers < z.len()` and finite
/// entries.
#[inline]
pub(crate) fn percentile_in_place(z: &mut [f64], outliers: usize) -> f64 {
    debug_assert!(outliers < z.len());
    let rank = z.len() - 1 - outliers;
    match outliers {
        0 => z.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        _ if rank == 0 => z.iter().copied().fold(f64::INFINITY, f64::min),
        _ => *z.select_nth_unstable_by(rank, f64::total_cmp).1,
    }
}

fn check_rank(len: usize, outliers: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::domain("percentile of an empty vector"));
    }
    if outliers >= len {
        return Err(Error::domain(format!(
            "outlier count {outliers} must be below the vector length {len}"
        )));
    }
    Ok(())
}

/// Empirical Value-at-Risk of `losses` at confidence level `beta`.
///
/// With `M` equally likely scenarios the smallest threshold exceeded with
/// probability at most `1 - beta` is the `(1 - beta) M` percentile, so this is
/// `percentile(losses, (1 - beta) M)`. Levels for which `(1 - beta) M` is not
/// an integer are rejected rather than rounded.
pub fn empirical_var(losses: &[f64], beta: f64) -> Result<f64> {
    let m = losses.len();
    if m == 0 {
        return Err(Error::domain("value-at-risk of an empty loss vector"));
    }
    let mf = m as f64;
    if !beta.is_finite() || beta < 1.0 / mf - BETA_INTEGRALITY_TOL || beta > 1.0 + BETA_INTEGRALITY_TOL
    {
        return Err(Error::domain(format!(
            "beta = {beta} outside [1/M, 1] = [{}, 1]",
            1.0 / mf
        )));
    }
    let tail = (1.0 - beta) * mf;
    let nearest = tail.round();
    if (tail - nearest).abs() > BETA_INTEGRALITY_TOL {
        let below = 1.0 - tail.ceil() / mf;
        let above = 1.0 - tail.floor() / mf;
        return Err(Error::domain(format!(
            "beta = {beta} is not a multiple of 1/M for M = {m}; nearest admissible levels are {below} and {above}"
        )));
    }
    let outliers = (nearest.max(0.0) as usize).min(m - 1);
    percentile(losses, outliers)
}

/// Exact minimizer of `x -> p_L{|x - d_m|}` over the real line.
///
/// Every global minimizer lies in the finite set made of the data points and
/// the midpoints of every pair, so enumerating that set is exact. Returns
/// `(x, value)`; among equally good candidates the smallest `x` wins.
pub fn scalar_percentile_minimize(d: &[f64], outliers: usize) -> Result<(f64, f64)> {
    check_rank(d.len(), outliers)?;
    if let Some(bad) = d.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("data contains {bad}")));
    }

    let mut candidates = d.to_vec();
    for (i, &a) in d.iter().enumerate() {
        for &b in &d[i + 1..] {
            candidates.push(0.5 * (a + b));
        }
    }

    let mut scratch = vec![0.0; d.len()];
    let mut best = (f64::NAN, f64::INFINITY);
    for x in candidates {
        for (s, &dm) in scratch.iter_mut().zip(d) {
            *s = (x - dm).abs();
        }
        let value = percentile_in_place(&mut scratch, outliers);
        if value < best.1 || (value == best.1 && x < best.0) {
            best = (x, value);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_oracle(z: &[f64], outliers: usize) -> f64 {
        let mut v = z.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        v[outliers]
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0).unwrap(), 3.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 2).unwrap(), 1.0);
        assert_eq!(percentile(&[5.0, 5.0, 2.0], 1).unwrap(), 5.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 1).unwrap(), 2.0);
    }

    #[test]
    fn percentile_rejects_bad_rank() {
        assert!(matches!(percentile(&[], 0), Err(Error::Domain(_))));
        assert!(matches!(percentile(&[1.0, 2.0], 2), Err(Error::Domain(_))));
        assert!(matches!(percentile(&[1.0, f64::NAN], 0), Err(Error::Domain(_))));
    }

    #[test]
    fn empirical_var_examples() {
        let losses = [3.0, 1.0, 2.0];
        assert_eq!(empirical_var(&losses, 1.0).unwrap(), 3.0);
        assert_eq!(empirical_var(&losses, 2.0 / 3.0).unwrap(), 2.0);
        assert_eq!(empirical_var(&losses, 1.0 / 3.0).unwrap(), 1.0);
    }

    #[test]
    fn empirical_var_rejects_off_grid_beta() {
        let err = empirical_var(&[3.0, 1.0, 2.0], 0.5).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0.333") && msg.contains("0.666"), "{msg}");
        assert!(empirical_var(&[3.0, 1.0, 2.0], 0.1).is_err());
        assert!(empirical_var(&[3.0, 1.0, 2.0], 1.2).is_err());
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(scalar_percentile_minimize(&[4.25], 0).unwrap(), (4.25, 0.0));
        assert_eq!(scalar_percentile_minimize(&[0.0, 1.0], 0).unwrap(), (0.5, 0.5));
        assert_eq!(
            scalar_percentile_minimize(&[0.0, 1.0, 10.0], 1).unwrap(),
            (0.5, 0.5)
        );
        assert!(scalar_percentile_minimize(&[], 0).is_err());
    }

    #[test]
    fn scalar_ties_prefer_smallest_x() {
        // With one outlier on {0, 10} the objective is min(|x|, |x - 10|),
        // which vanishes at both data points.
        assert_eq!(scalar_percentile_minimize(&[10.0, 0.0], 1).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn scalar_duplicates_collapse() {
        let (x, v) = scalar_percentile_minimize(&[2.0, 2.0, 2.0], 0).unwrap();
        assert_eq!((x, v), (2.0, 0.0));
    }

    fn vec_and_rank() -> impl Strategy<Value = (Vec<f64>, usize)> {
        prop::collection::vec(-1e3..1e3f64, 1..20).prop_flat_map(|v| {
            let n = v.len();
            (Just(v), 0..n)
        })
    }

    proptest! {
        #[test]
        fn matches_sorted_oracle((z, l) in vec_and_rank()) {
            prop_assert_eq!(percentile(&z, l).unwrap(), sorted_oracle(&z, l));
        }

        #[test]
        fn value_is_an_element((z, l) in vec_and_rank()) {
            let p = percentile(&z, l).unwrap();
            prop_assert!(z.contains(&p));
        }

        #[test]
        fn endpoints_and_monotone(z in prop::collection::vec(-1e3..1e3f64, 1..20)) {
            let m = z.len();
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = z.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(percentile(&z, 0).unwrap(), max);
            prop_assert_eq!(percentile(&z, m - 1).unwrap(), min);
            for l in 1..m {
                prop_assert!(percentile(&z, l).unwrap() <= percentile(&z, l - 1).unwrap());
            }
        }

        #[test]
        fn permutation_invariant((z, l) in vec_and_rank(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = z.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(percentile(&shuffled, l).unwrap(), percentile(&z, l).unwrap());
        }

        #[test]
        fn shift_and_scale_equivariant(
            (z, l) in vec_and_rank(),
            shift in -100.0..100.0f64,
            scale in 0.0..100.0f64,
        ) {
            let p = percentile(&z, l).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let scaled: Vec<f64> = z.iter().map(|v| v * scale).collect();
            // Adding a constant preserves the ranking, so the selected entry is
            // the shifted original up to the rounding of that single addition.
            prop_assert_eq!(percentile(&shifted, l).unwrap(), p + shift);
            prop_assert_eq!(percentile(&scaled, l).unwrap(), p * scale);
        }

        #[test]
        fn var_matches_percentile((z, l) in vec_and_rank()) {
            let m = z.len() as f64;
            let beta = 1.0 - l as f64 / m;
            prop_assert_eq!(empirical_var(&z, beta).unwrap(), percentile(&z, l).unwrap());
        }
    }
}
