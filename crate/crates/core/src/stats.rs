//! Correlation statistics over paired series: descriptive summaries,
//! Pearson / Kendall / Spearman coefficients, Fisher-z confidence
//! intervals, and a Student-t significance test.
//!
//! Conventions:
//!
//! * variances are sample variances (the `n - 1` denominator);
//! * Kendall is the tie-corrected tau-b (which equals tau-a when no ties
//!   are present);
//! * Spearman is the Pearson correlation of average ranks, which reduces to
//!   `1 - 6 Σ d² / (n (n² - 1))` when no ties are present;
//! * Fisher intervals use `z = atanh(r)`, `se = 1 / sqrt(n - 3)` and the
//!   two-sided normal quantile of the requested confidence;
//! * significance is the two-sided Student-t test with `n - 2` degrees of
//!   freedom on `t = r sqrt(n - 2) / sqrt(1 - r²)`.

use crate::numeric::{normal_quantile, student_t_two_sided_tail};
use serde::Serialize;
use std::fmt;

/// Which coordinate of a paired series an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

/// Errors raised by the statistics toolkit.
#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("series `{label}` is empty")]
    EmptySeries { label: String },
    #[error("{what}: {n} observations given, at least {needed} required")]
    InsufficientData {
        what: String,
        n: usize,
        needed: usize,
    },
    #[error("series `{label}`: non-finite value on the {axis} axis at position {index}")]
    NonFinite {
        label: String,
        axis: Axis,
        index: usize,
    },
    #[error("series `{label}`: the {axis} axis is constant, correlation is undefined")]
    ConstantAxis { label: String, axis: Axis },
    #[error("correlation coefficient {value} lies outside [-1, 1]")]
    InvalidCoefficient { value: f64 },
    #[error("confidence level {value} must lie strictly between 0 and 1")]
    InvalidConfidence { value: f64 },
}

/// A labelled series of `(x, y)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Builds a series from explicit `(x, y)` pairs.
    pub fn from_pairs(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }

    /// Builds a series from plain values against an index axis
    /// `1, 2, ..., n`.
    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Self {
        Series {
            label: label.into(),
            points: values
                .iter()
                .enumerate()
                .map(|(i, &v)| ((i + 1) as f64, v))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// The same series with `y` replaced by `|y|`.
    pub fn magnitudes(&self) -> Series {
        Series {
            label: format!("{}_magnitude", self.label),
            points: self.points.iter().map(|&(x, y)| (x, y.abs())).collect(),
        }
    }

    /// The same series with `x` replaced by the index axis `1..=n`.
    pub fn with_index_axis(&self) -> Series {
        Series {
            label: self.label.clone(),
            points: self
                .points
                .iter()
                .enumerate()
                .map(|(i, &(_, y))| ((i + 1) as f64, y))
                .collect(),
        }
    }

    fn check_finite(&self) -> Result<(), StatsError> {
        for (index, &(x, y)) in self.points.iter().enumerate() {
            if !x.is_finite() {
                return Err(StatsError::NonFinite {
                    label: self.label.clone(),
                    axis: Axis::X,
                    index,
                });
            }
            if !y.is_finite() {
                return Err(StatsError::NonFinite {
                    label: self.label.clone(),
                    axis: Axis::Y,
                    index,
                });
            }
        }
        Ok(())
    }
}

/// Descriptive summary of the `y` values of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescriptiveSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample variance (`n - 1` denominator); `None` when `n < 2`.
    pub variance: Option<f64>,
    /// Sample standard deviation; `None` when `n < 2`.
    pub std_dev: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Descriptive summary of the series' `y` values.
///
/// ```
/// use circex_core::stats::{describe, Series};
/// let summary = describe(&Series::from_values("s", &[1.0, 2.0, 3.0])).unwrap();
/// assert_eq!(summary.mean, 2.0);
/// assert_eq!(summary.variance, Some(1.0));
/// assert_eq!(summary.std_dev, Some(1.0));
/// ```
pub fn describe(series: &Series) -> Result<DescriptiveSummary, StatsError> {
    if series.is_empty() {
        return Err(StatsError::EmptySeries {
            label: series.label.clone(),
        });
    }
    series.check_finite()?;
    let ys = series.ys();
    let n = ys.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let (variance, std_dev) = if n >= 2 {
        let ss = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
        let variance = ss / (n - 1) as f64;
        (Some(variance), Some(variance.sqrt()))
    } else {
        (None, None)
    };
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DescriptiveSummary {
        n,
        mean,
        variance,
        std_dev,
        min,
        max,
    })
}

/// The correlation estimator a [`CorrelationReport`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    Pearson,
    Kendall,
    Spearman,
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Kendall => "kendall",
            CorrelationMethod::Spearman => "spearman",
        })
    }
}

/// A two-sided confidence interval for a correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
}

/// One correlation estimate, optionally with inference attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub method: CorrelationMethod,
    pub coefficient: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence_interval: Option<ConfidenceInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

impl CorrelationReport {
    /// Attaches a Fisher-z confidence interval and a two-sided Student-t
    /// p-value to the report. The interval is exact-in-form for Pearson
    /// coefficients and a common large-sample approximation for the rank
    /// coefficients.
    pub fn with_inference(mut self, confidence: f64) -> Result<Self, StatsError> {
        self.confidence_interval = Some(fisher_interval(self.coefficient, self.n, confidence)?);
        self.p_value = Some(correlation_significance(self.coefficient, self.n)?);
        Ok(self)
    }
}

fn require_points(
    series: &Series,
    needed: usize,
    what: &str,
) -> Result<(), StatsError> {
    if series.is_empty() {
        return Err(StatsError::EmptySeries {
            label: series.label.clone(),
        });
    }
    if series.len() < needed {
        return Err(StatsError::InsufficientData {
            what: format!("{what} over series `{}`", series.label),
            n: series.len(),
            needed,
        });
    }
    series.check_finite()
}

fn centered_moments(label: &str, xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), StatsError> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantAxis {
            label: label.to_string(),
            axis: Axis::X,
        });
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantAxis {
            label: label.to_string(),
            axis: Axis::Y,
        });
    }
    Ok((sxx, syy, sxy))
}

/// Pearson product-moment correlation (two-pass centered sums). Needs at
/// least three points and non-constant coordinates.
pub fn pearson(series: &Series) -> Result<CorrelationReport, StatsError> {
    require_points(series, 3, "pearson correlation")?;
    let xs = series.xs();
    let ys = series.ys();
    let (sxx, syy, sxy) = centered_moments(&series.label, &xs, &ys)?;
    Ok(CorrelationReport {
        method: CorrelationMethod::Pearson,
        coefficient: sxy / (sxx * syy).sqrt(),
        n: series.len(),
        confidence_interval: None,
        p_value: None,
    })
}

/// Counts strict inversions in `values` by merge sort. Pairs `(i, j)` with
/// `i < j` and `values[i] > values[j]` are counted once; ties are not
/// inversions.
fn count_inversions(values: &mut [f64], buffer: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inversions = count_inversions(left, buffer) + count_inversions(right, buffer);
    let mut i = 0;
    let mut j = 0;
    let merged = &mut buffer[..n];
    for slot in merged.iter_mut() {
        if i < left.len() && (j >= right.len() || left[i] <= right[j]) {
            *slot = left[i];
            i += 1;
        } else {
            // right[j] is strictly smaller than every remaining left value.
            inversions += (left.len() - i) as u64;
            *slot = right[j];
            j += 1;
        }
    }
    values.copy_from_slice(merged);
    inversions
}

/// Sum of `t (t - 1) / 2` over runs of equal values in sorted order, i.e.
/// the number of tied pairs.
fn tied_pairs_sorted(sorted: &[f64]) -> u64 {
    let mut pairs = 0u64;
    let mut run = 1u64;
    for window in sorted.windows(2) {
        if window[0] == window[1] {
            run += 1;
        } else {
            pairs += run * (run - 1) / 2;
            run = 1;
        }
    }
    pairs + run * (run - 1) / 2
}

/// Kendall rank correlation, tau-b (tie-corrected; equals tau-a when no
/// ties are present). Computed via merge-sort inversion counting in
/// `O(n log n)`; needs at least two points and at least one non-tied
/// coordinate on each axis.
pub fn kendall_tau(series: &Series) -> Result<CorrelationReport, StatsError> {
    require_points(series, 2, "kendall correlation")?;
    let n = series.len();

    // Sort lexicographically by (x, y).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (xa, ya) = series.points[a];
        let (xb, yb) = series.points[b];
        (xa, ya).partial_cmp(&(xb, yb)).expect("finite values")
    });
    let xs_sorted: Vec<f64> = order.iter().map(|&i| series.points[i].0).collect();
    let ys_by_x: Vec<f64> = order.iter().map(|&i| series.points[i].1).collect();

    // Tied pairs on x, on y, and jointly on (x, y).
    let x_ties = tied_pairs_sorted(&xs_sorted);
    let mut ys_sorted = ys_by_x.clone();
    ys_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let y_ties = tied_pairs_sorted(&ys_sorted);
    let joint_ties = {
        let mut pairs = 0u64;
        let mut run = 1u64;
        for w in order.windows(2) {
            if series.points[w[0]] == series.points[w[1]] {
                run += 1;
            } else {
                pairs += run * (run - 1) / 2;
                run = 1;
            }
        }
        pairs + run * (run - 1) / 2
    };

    // Discordant pairs: strict y-inversions in x-order. Pairs tied on x
    // contribute none because they are sorted by y within the x group.
    let mut scratch = ys_by_x;
    let mut buffer = vec![0.0; n];
    let discordant = count_inversions(&mut scratch, &mut buffer);

    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    if x_ties == total_pairs {
        return Err(StatsError::ConstantAxis {
            label: series.label.clone(),
            axis: Axis::X,
        });
    }
    if y_ties == total_pairs {
        return Err(StatsError::ConstantAxis {
            label: series.label.clone(),
            axis: Axis::Y,
        });
    }

    // C - D = total - x_ties - y_ties + joint_ties - 2 * discordant,
    // exactly, in integer arithmetic.
    let concordant_minus_discordant = total_pairs as i128 - x_ties as i128 - y_ties as i128
        + joint_ties as i128
        - 2 * discordant as i128;
    let denominator =
        (((total_pairs - x_ties) as f64) * ((total_pairs - y_ties) as f64)).sqrt();
    Ok(CorrelationReport {
        method: CorrelationMethod::Kendall,
        coefficient: concordant_minus_discordant as f64 / denominator,
        n,
        confidence_interval: None,
        p_value: None,
    })
}

/// Average ranks (1-based; ties share the mean of their positions).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the average 1-based rank.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &index in &order[i..=j] {
            ranks[index] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: the Pearson correlation of average ranks.
/// Without ties this is evaluated through the exact closed form
/// `1 - 6 Σ d² / (n (n² - 1))`. Needs at least three points and
/// non-constant coordinates.
pub fn spearman_rho(series: &Series) -> Result<CorrelationReport, StatsError> {
    require_points(series, 3, "spearman correlation")?;
    let n = series.len();
    let xs = series.xs();
    let ys = series.ys();
    let rank_x = average_ranks(&xs);
    let rank_y = average_ranks(&ys);

    let has_ties = |ranks: &[f64]| ranks.iter().any(|r| r.fract() != 0.0) || {
        let mut sorted = ranks.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("ranks are finite"));
        sorted.windows(2).any(|w| w[0] == w[1])
    };

    let coefficient = if !has_ties(&rank_x) && !has_ties(&rank_y) {
        // d and the sums below are integers represented exactly in f64.
        let d_squared: f64 = rank_x
            .iter()
            .zip(&rank_y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let nf = n as f64;
        1.0 - 6.0 * d_squared / (nf * (nf * nf - 1.0))
    } else {
        let label = format!("{} (ranks)", series.label);
        let (sxx, syy, sxy) = centered_moments(&label, &rank_x, &rank_y).map_err(|e| match e {
            StatsError::ConstantAxis { axis, .. } => StatsError::ConstantAxis {
                label: series.label.clone(),
                axis,
            },
            other => other,
        })?;
        sxy / (sxx * syy).sqrt()
    };
    Ok(CorrelationReport {
        method: CorrelationMethod::Spearman,
        coefficient,
        n,
        confidence_interval: None,
        p_value: None,
    })
}

/// Fisher-z confidence interval for a correlation coefficient observed on
/// `n` pairs.
///
/// Degenerate case: `|r| = 1` maps to an infinite `z`, so the interval
/// collapses to `(r, r)`. Needs `n >= 4` so that the standard error
/// `1 / sqrt(n - 3)` exists.
///
/// ```
/// use circex_core::stats::fisher_interval;
/// let ci = fisher_interval(0.5, 12, 0.95).unwrap();
/// assert!((ci.lower + 0.1036).abs() < 1e-3);
/// assert!((ci.upper - 0.8345).abs() < 1e-3);
/// ```
pub fn fisher_interval(
    r: f64,
    n: usize,
    confidence: f64,
) -> Result<ConfidenceInterval, StatsError> {
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(StatsError::InvalidCoefficient { value: r });
    }
    if !confidence.is_finite() || confidence <= 0.0 || confidence >= 1.0 {
        return Err(StatsError::InvalidConfidence { value: confidence });
    }
    if n < 4 {
        return Err(StatsError::InsufficientData {
            what: "fisher interval".to_string(),
            n,
            needed: 4,
        });
    }
    if r.abs() == 1.0 {
        return Ok(ConfidenceInterval {
            lower: r,
            upper: r,
            confidence,
        });
    }
    let z = r.atanh();
    let se = 1.0 / ((n - 3) as f64).sqrt();
    let q = normal_quantile(0.5 + confidence / 2.0);
    Ok(ConfidenceInterval {
        lower: (z - q * se).tanh(),
        upper: (z + q * se).tanh(),
        confidence,
    })
}

/// Two-sided p-value of the Student-t significance test for a correlation
/// coefficient observed on `n` pairs (`n - 2` degrees of freedom). Needs
/// `n >= 3`; `|r| = 1` yields 0 and `r = 0` yields 1.
pub fn correlation_significance(r: f64, n: usize) -> Result<f64, StatsError> {
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(StatsError::InvalidCoefficient { value: r });
    }
    if n < 3 {
        return Err(StatsError::InsufficientData {
            what: "correlation significance".to_string(),
            n,
            needed: 3,
        });
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    Ok(student_t_two_sided_tail(t, df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(points: &[(f64, f64)]) -> Series {
        Series::from_pairs("test", points.to_vec())
    }

    #[test]
    fn describe_basics() {
        let summary = describe(&Series::from_values("s", &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(summary.n, 3);
        assert_eq!(summary.mean, 2.0);
        assert_eq!(summary.variance, Some(1.0));
        assert_eq!(summary.std_dev, Some(1.0));
        assert_eq!(summary.min, 1.0);
        assert_eq!(summary.max, 3.0);
    }

    #[test]
    fn describe_single_point_has_no_variance() {
        let summary = describe(&Series::from_values("s", &[7.0])).unwrap();
        assert_eq!(summary.mean, 7.0);
        assert_eq!(summary.variance, None);
        assert_eq!(summary.std_dev, None);
    }

    #[test]
    fn describe_rejects_empty_and_non_finite() {
        assert!(matches!(
            describe(&Series::from_values("s", &[])),
            Err(StatsError::EmptySeries { .. })
        ));
        assert!(matches!(
            describe(&series(&[(1.0, f64::NAN)])),
            Err(StatsError::NonFinite { axis: Axis::Y, .. })
        ));
    }

    #[test]
    fn pearson_perfect_and_reversed() {
        let up = series(&[(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]);
        assert_abs_diff_eq!(pearson(&up).unwrap().coefficient, 1.0, epsilon = 1e-15);
        let down = series(&[(1.0, 6.0), (2.0, 4.0), (3.0, 2.0)]);
        assert_abs_diff_eq!(pearson(&down).unwrap().coefficient, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn pearson_needs_three_points_and_variance() {
        assert!(matches!(
            pearson(&series(&[(1.0, 2.0), (2.0, 3.0)])),
            Err(StatsError::InsufficientData { .. })
        ));
        assert!(matches!(
            pearson(&series(&[(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)])),
            Err(StatsError::ConstantAxis { axis: Axis::Y, .. })
        ));
        assert!(matches!(
            pearson(&series(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)])),
            Err(StatsError::ConstantAxis { axis: Axis::X, .. })
        ));
    }

    #[test]
    fn kendall_no_ties_matches_tau_a() {
        // y order: 1, 3, 2 -> one discordant pair out of three.
        let s = series(&[(1.0, 1.0), (2.0, 3.0), (3.0, 2.0)]);
        let tau = kendall_tau(&s).unwrap().coefficient;
        assert_abs_diff_eq!(tau, (2.0 - 1.0) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn kendall_with_ties_uses_tau_b() {
        // x: 1 1 2 2, y: 1 2 3 3.
        let s = series(&[(1.0, 1.0), (1.0, 2.0), (2.0, 3.0), (2.0, 3.0)]);
        // Pairs: total 6, x-tied 2, y-tied 1, concordant 4, discordant 0.
        // tau-b = 4 / sqrt((6-2) (6-1)) = 4 / sqrt(20).
        let tau = kendall_tau(&s).unwrap().coefficient;
        assert_abs_diff_eq!(tau, 4.0 / 20f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn kendall_rejects_fully_tied_axis() {
        let s = series(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]);
        assert!(matches!(
            kendall_tau(&s),
            Err(StatsError::ConstantAxis { axis: Axis::Y, .. })
        ));
    }

    #[test]
    fn spearman_no_ties_closed_form() {
        // Ranks x: 1 2 3 4 5, ranks y: 2 1 3 5 4 -> d² sum = 1+1+0+1+1 = 4.
        let s = series(&[(1.0, 20.0), (2.0, 10.0), (3.0, 30.0), (4.0, 50.0), (5.0, 40.0)]);
        let rho = spearman_rho(&s).unwrap().coefficient;
        assert_eq!(rho, 1.0 - 6.0 * 4.0 / (5.0 * 24.0));
        assert_eq!(rho, 0.8);
    }

    #[test]
    fn spearman_monotone_transform_invariant() {
        let s = series(&[(1.0, 2.0), (2.0, 5.0), (3.0, 3.0), (4.0, 9.0)]);
        let transformed = Series::from_pairs(
            "t",
            s.points.iter().map(|&(x, y)| (x.exp(), y * y * y)).collect(),
        );
        assert_eq!(
            spearman_rho(&s).unwrap().coefficient,
            spearman_rho(&transformed).unwrap().coefficient
        );
    }

    #[test]
    fn spearman_handles_ties_via_average_ranks() {
        let s = series(&[(1.0, 1.0), (2.0, 2.0), (3.0, 2.0), (4.0, 4.0)]);
        let rho = spearman_rho(&s).unwrap().coefficient;
        // Ranks y = 1, 2.5, 2.5, 4; Pearson of (1,2,3,4) against it.
        let expected = pearson(&series(&[(1.0, 1.0), (2.0, 2.5), (3.0, 2.5), (4.0, 4.0)]))
            .unwrap()
            .coefficient;
        assert_abs_diff_eq!(rho, expected, epsilon = 1e-15);
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn fisher_interval_reference_values() {
        let ci = fisher_interval(0.5, 12, 0.95).unwrap();
        assert_abs_diff_eq!(ci.lower, -0.103641681237, epsilon = 1e-9);
        assert_abs_diff_eq!(ci.upper, 0.834454285209, epsilon = 1e-9);
    }

    #[test]
    fn fisher_interval_edge_cases() {
        let degenerate = fisher_interval(1.0, 10, 0.95).unwrap();
        assert_eq!((degenerate.lower, degenerate.upper), (1.0, 1.0));
        assert!(matches!(
            fisher_interval(0.5, 3, 0.95),
            Err(StatsError::InsufficientData { .. })
        ));
        assert!(matches!(
            fisher_interval(1.5, 10, 0.95),
            Err(StatsError::InvalidCoefficient { .. })
        ));
        assert!(matches!(
            fisher_interval(0.5, 10, 1.0),
            Err(StatsError::InvalidConfidence { .. })
        ));
    }

    #[test]
    fn fisher_interval_contains_r_and_narrows() {
        let wide = fisher_interval(0.42, 8, 0.95).unwrap();
        let narrow = fisher_interval(0.42, 80, 0.95).unwrap();
        assert!(wide.lower < 0.42 && 0.42 < wide.upper);
        assert!(narrow.lower < 0.42 && 0.42 < narrow.upper);
        assert!(narrow.upper - narrow.lower < wide.upper - wide.lower);
    }

    #[test]
    fn significance_reference_values() {
        assert_eq!(correlation_significance(0.0, 10).unwrap(), 1.0);
        assert_eq!(correlation_significance(1.0, 10).unwrap(), 0.0);
        let p = correlation_significance(0.999999, 10).unwrap();
        assert!(p < 1e-6, "p = {p}");
        assert!(matches!(
            correlation_significance(0.5, 2),
            Err(StatsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn with_inference_attaches_ci_and_p() {
        let s = series(&[(1.0, 2.0), (2.0, 3.0), (3.0, 5.0), (4.0, 4.0), (5.0, 6.0)]);
        let report = pearson(&s).unwrap().with_inference(0.95).unwrap();
        let ci = report.confidence_interval.unwrap();
        assert!(ci.lower < report.coefficient && report.coefficient < ci.upper);
        let p = report.p_value.unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
