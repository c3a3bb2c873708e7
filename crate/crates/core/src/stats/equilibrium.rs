//! Windowed equilibrium detection on a recorded variance series.
//!
//! At every position `t` with two full trailing windows, the mean of the
//! latest `window` values is compared with the mean of the `window` values
//! before them. The series is at equilibrium from the first `t` whose
//! relative change stays below `tolerance` for `window` consecutive
//! positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default window, in recorded points.
pub const DEFAULT_WINDOW: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Index (as recorded in the series) where equilibrium begins.
    pub equilibrium_index: Option<u64>,
    pub window: usize,
    pub tolerance: f64,
    /// Mean over the final 10% of recorded points.
    pub final_variance: f64,
}

/// Mean of the last tenth of `values` (at least one point).
pub(crate) fn tail_mean(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let len = values.len();
    if len == 0 {
        return 0.0;
    }
    let take = (len / 10).max(1);
    values.skip(len - take).sum::<f64>() / take as f64
}

pub fn detect_equilibrium(
    series: &[(u64, f64)],
    window: usize,
    tolerance: f64,
) -> Result<ConvergenceReport> {
    if window < 2 {
        return Err(Error::param(format!("window must be >= 2, got {window}")));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::param(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    if series.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::param("series must be sorted by index"));
    }

    let final_variance = tail_mean(series.iter().map(|(_, v)| *v));
    let mut report = ConvergenceReport {
        converged: false,
        equilibrium_index: None,
        window,
        tolerance,
        final_variance,
    };
    if series.len() < 2 * window {
        return Ok(report);
    }

    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for (_, v) in series {
        acc += v;
        prefix.push(acc);
    }
    let window_mean = |end: usize| (prefix[end] - prefix[end - window]) / window as f64;

    let mut streak_start = None;
    for t in (2 * window - 1)..series.len() {
        let recent = window_mean(t + 1);
        let earlier = window_mean(t + 1 - window);
        if relative_change(recent, earlier) < tolerance {
            let start = *streak_start.get_or_insert(t);
            if t + 1 - start >= window {
                report.converged = true;
                report.equilibrium_index = Some(series[start].0);
                return Ok(report);
            }
        } else {
            streak_start = None;
        }
    }
    Ok(report)
}

fn relative_change(recent: f64, earlier: f64) -> f64 {
    let diff = (recent - earlier).abs();
    if earlier != 0.0 {
        diff / earlier.abs()
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Recomputes both window means from scratch at every candidate position.
    fn brute_force(series: &[(u64, f64)], window: usize, tol: f64) -> Option<u64> {
        let mean = |lo: usize, hi: usize| {
            series[lo..hi].iter().map(|p| p.1).sum::<f64>() / (hi - lo) as f64
        };
        let below = |t: usize| {
            let recent = mean(t + 1 - window, t + 1);
            let earlier = mean(t + 1 - 2 * window, t + 1 - window);
            (recent - earlier).abs() / earlier.abs() < tol
        };
        let first = 2 * window - 1;
        (first..series.len())
            .find(|&t| t + window <= series.len() && (t..t + window).all(below))
            .map(|t| series[t].0)
    }

    fn indexed(values: impl IntoIterator<Item = f64>) -> Vec<(u64, f64)> {
        values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as u64, v))
            .collect()
    }

    #[test]
    fn constant_series_converges_at_first_eligible_index() {
        for window in [2, 5, 40] {
            let series = indexed(std::iter::repeat_n(3.0, 4 * window));
            let report = detect_equilibrium(&series, window, 1e-3).unwrap();
            assert!(report.converged);
            assert_eq!(report.equilibrium_index, Some(2 * window as u64 - 1));
            assert_eq!(report.final_variance, 3.0);
        }
    }

    #[test]
    fn doubling_series_never_converges() {
        let series = indexed((0..200).map(|i| 2f64.powi(i)));
        let report = detect_equilibrium(&series, 5, 1e-3).unwrap();
        assert!(!report.converged);
        assert_eq!(report.equilibrium_index, None);
    }

    #[test]
    fn geometric_decay_matches_direct_scan() {
        let r: f64 = 0.8735;
        let series = indexed((0..400).map(|m| 1.0 + r.powi(m)));
        for (window, tol) in [(5, 1e-3), (10, 1e-3), (20, 1e-4), (3, 1e-6)] {
            let report = detect_equilibrium(&series, window, tol).unwrap();
            let expected = brute_force(&series, window, tol);
            assert_eq!(
                report.equilibrium_index, expected,
                "window {window}, tol {tol}"
            );
            // Closed-form window means of 1 + r^m. Monotone decay means the
            // first position below tolerance starts the streak.
            let w = window as i32;
            let window_mean =
                |first: i32| 1.0 + r.powi(first) * (1.0 - r.powi(w)) / ((1.0 - r) * w as f64);
            let analytic = |t: i32| {
                let earlier = window_mean(t - 2 * w + 1);
                (earlier - window_mean(t - w + 1)) / earlier
            };
            let t = report.equilibrium_index.unwrap() as i32;
            assert!(analytic(t) < tol);
            if t > 2 * w - 1 {
                assert!(analytic(t - 1) >= tol);
            }
        }
    }

    #[test]
    fn short_series_is_not_enough_data() {
        let series = indexed(std::iter::repeat_n(1.0, 19));
        let report = detect_equilibrium(&series, 10, 1e-3).unwrap();
        assert!(!report.converged);
    }

    #[test]
    fn rejects_bad_arguments() {
        let series = indexed([1.0, 2.0, 3.0]);
        assert!(detect_equilibrium(&series, 1, 1e-3).is_err());
        assert!(detect_equilibrium(&series, 2, 0.0).is_err());
        assert!(detect_equilibrium(&[(3, 1.0), (1, 1.0)], 2, 1e-3).is_err());
    }
}
