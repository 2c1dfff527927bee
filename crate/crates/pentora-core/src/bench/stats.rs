//! Success-resource statistics: point-biserial correlation, medians, CDFs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Point-biserial correlation between a binary outcome and a metric, with a
/// two-sided p-value from the t distribution on n−2 degrees of freedom.
///
/// r = ((M1 − M0) / s_n) · sqrt(p·q), with population standard deviation
/// s_n over all values, group means M1 (success) and M0 (failure), and
/// class proportions p, q. Identical to the Pearson correlation with
/// outcomes coded 1/0.
pub fn point_biserial(outcomes: &[bool], values: &[f64]) -> Result<(f64, f64), StatsError> {
    if outcomes.len() != values.len() {
        return Err(StatsError::DegenerateInput(format!(
            "length mismatch: {} outcomes vs {} values",
            outcomes.len(),
            values.len()
        )));
    }
    let n = outcomes.len();
    if n < 3 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 3 points, got {n}"
        )));
    }
    let n1 = outcomes.iter().filter(|&&o| o).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(StatsError::DegenerateInput(
            "only one outcome class present".into(),
        ));
    }

    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
    if variance == 0.0 {
        return Err(StatsError::DegenerateInput(
            "values have zero variance".into(),
        ));
    }
    let s_n = variance.sqrt();

    let m1 = outcomes
        .iter()
        .zip(values)
        .filter(|(&o, _)| o)
        .map(|(_, v)| v)
        .sum::<f64>()
        / n1 as f64;
    let m0 = outcomes
        .iter()
        .zip(values)
        .filter(|(&o, _)| !o)
        .map(|(_, v)| v)
        .sum::<f64>()
        / n0 as f64;
    let p = n1 as f64 / nf;
    let q = n0 as f64 / nf;
    let r = ((m1 - m0) / s_n) * (p * q).sqrt();

    Ok((r, two_sided_p(r, n)))
}

/// Exact t transform: t = r·sqrt((n−2)/(1−r²)), p = 2·P(T ≥ |t|).
fn two_sided_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Median with the usual mid-point convention for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    })
}

/// One step of an empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub series: String,
    pub value: f64,
    pub cdf: f64,
}

/// Empirical CDF over `values` as a named series: non-decreasing, ending at
/// exactly 1.0.
pub fn cdf_series(series: &str, values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &value)| CdfPoint {
            series: series.to_string(),
            value,
            cdf: if i + 1 == sorted.len() {
                1.0
            } else {
                (i + 1) as f64 / n
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Independent oracle: Pearson correlation via the sum formula on
    /// 1/0-coded outcomes. Deliberately a different algebraic route from
    /// the grouped-means formula under test.
    fn pearson_oracle(outcomes: &[bool], values: &[f64]) -> f64 {
        let n = outcomes.len() as f64;
        let xs: Vec<f64> = outcomes
            .iter()
            .map(|&o| if o { 1.0 } else { 0.0 })
            .collect();
        let sum_x: f64 = xs.iter().sum();
        let sum_y: f64 = values.iter().sum();
        let sum_xy: f64 = xs.iter().zip(values).map(|(x, y)| x * y).sum();
        let sum_x2: f64 = xs.iter().map(|x| x * x).sum();
        let sum_y2: f64 = values.iter().map(|y| y * y).sum();
        (n * sum_xy - sum_x * sum_y)
            / ((n * sum_x2 - sum_x * sum_x).sqrt() * (n * sum_y2 - sum_y * sum_y).sqrt())
    }

    #[test]
    fn hand_computable_case_is_exactly_minus_one() {
        // Means 1 and 3, overall mean 2, population std 1, p = q = 0.5:
        // r = ((1-3)/1)·0.5 = −1 exactly.
        let (r, p) = point_biserial(&[true, true, false, false], &[1.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(r, -1.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn single_class_is_degenerate() {
        let err = point_biserial(&[true, true, true], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, StatsError::DegenerateInput(_)));
        let err = point_biserial(&[true, false, true], &[2.0, 2.0, 2.0]).unwrap_err();
        assert!(matches!(err, StatsError::DegenerateInput(_)));
    }

    #[test]
    fn agrees_with_pearson_oracle_on_random_data() {
        let mut rng = StdRng::seed_from_u64(42);
        let outcomes: Vec<bool> = (0..20).map(|i| i % 3 == 0).collect();
        let values: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..100.0)).collect();
        let (r, _) = point_biserial(&outcomes, &values).unwrap();
        let oracle = pearson_oracle(&outcomes, &values);
        assert!((r - oracle).abs() < 1e-12, "r={r} oracle={oracle}");
    }

    #[test]
    fn p_value_is_small_for_strong_effects_and_large_for_noise() {
        // Strong separation.
        let outcomes: Vec<bool> = (0..30).map(|i| i < 15).collect();
        let values: Vec<f64> = (0..30)
            .map(|i| {
                if i < 15 {
                    1.0 + 0.01 * i as f64
                } else {
                    10.0 + 0.01 * i as f64
                }
            })
            .collect();
        let (r, p) = point_biserial(&outcomes, &values).unwrap();
        assert!(r < -0.9);
        assert!(p < 0.001);

        // Noise.
        let mut rng = StdRng::seed_from_u64(7);
        let outcomes: Vec<bool> = (0..40).map(|_| rng.random_bool(0.5)).collect();
        if outcomes.iter().any(|&o| o) && outcomes.iter().any(|&o| !o) {
            let values: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..1.0)).collect();
            let (_, p) = point_biserial(&outcomes, &values).unwrap();
            assert!(p > 0.001);
        }
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[5.0]), Some(5.0));
        assert_eq!(median(&[1.0, 2.0, 4.0]), Some(2.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]), Some(2.5));
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let points = cdf_series("all", &[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(points.len(), 4);
        for pair in points.windows(2) {
            assert!(pair[1].cdf >= pair[0].cdf);
            assert!(pair[1].value >= pair[0].value);
        }
        assert_eq!(points.last().unwrap().cdf, 1.0);
    }
}
