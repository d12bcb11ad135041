//! Forecast evaluation metrics: RMSE, MAE, MAPE and RRSE over aligned
//! actual/predicted vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("actual and predicted lengths differ: {actual} vs {predicted}")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("empty input vectors")]
    Empty,
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("actual values within epsilon of zero at indices {indices:?}; MAPE undefined")]
    ZeroDenominator { indices: Vec<usize> },
    #[error("actual vector is constant; RRSE denominator is zero")]
    ConstantActuals,
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// How MAPE treats actual values whose magnitude falls below the epsilon guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroPolicy {
    /// Fail with the offending indices (default).
    Error,
    /// Drop the offending indices from the mean.
    Exclude,
}

/// One row of evaluation results, all in the units of the inputs
/// (MAPE in percent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
    pub rrse: f64,
}

impl MetricRow {
    /// Computes all four metrics in one pass over validated inputs.
    pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<MetricRow> {
        Ok(MetricRow {
            rmse: rmse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            mape: mape(actual, predicted)?,
            rrse: rrse(actual, predicted)?,
        })
    }
}

fn check_inputs(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    for (i, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if !a.is_finite() || !p.is_finite() {
            return Err(MetricsError::NonFinite { index: i });
        }
    }
    Ok(())
}

/// Pairwise (cascade) summation; keeps rounding error O(log n) so the
/// 1e-12 oracle tolerance holds even for 10^4-length vectors.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

fn pairwise_sum_by(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let terms: Vec<f64> = (0..n).map(&mut f).collect();
    pairwise_sum(&terms)
}

/// Root mean squared error.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_inputs(actual, predicted)?;
    let n = actual.len();
    let ss = pairwise_sum_by(n, |i| {
        let d = actual[i] - predicted[i];
        d * d
    });
    Ok((ss / n as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_inputs(actual, predicted)?;
    let n = actual.len();
    Ok(pairwise_sum_by(n, |i| (actual[i] - predicted[i]).abs()) / n as f64)
}

/// Mean absolute percentage error, in percent, with the default epsilon
/// guard (1e-9) and hard-error policy on near-zero actuals.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    mape_with(actual, predicted, 1e-9, ZeroPolicy::Error)
}

/// MAPE with an explicit epsilon guard and near-zero handling policy.
pub fn mape_with(
    actual: &[f64],
    predicted: &[f64],
    epsilon_guard: f64,
    policy: ZeroPolicy,
) -> Result<f64> {
    check_inputs(actual, predicted)?;
    let offending: Vec<usize> = actual
        .iter()
        .enumerate()
        .filter(|(_, a)| a.abs() <= epsilon_guard)
        .map(|(i, _)| i)
        .collect();
    let kept: Vec<usize> = match (policy, offending.is_empty()) {
        (_, true) => (0..actual.len()).collect(),
        (ZeroPolicy::Error, false) => {
            return Err(MetricsError::ZeroDenominator { indices: offending })
        }
        (ZeroPolicy::Exclude, false) => (0..actual.len())
            .filter(|i| actual[*i].abs() > epsilon_guard)
            .collect(),
    };
    if kept.is_empty() {
        return Err(MetricsError::ZeroDenominator { indices: offending });
    }
    let sum = pairwise_sum_by(kept.len(), |j| {
        let i = kept[j];
        (actual[i] - predicted[i]).abs() / actual[i].abs()
    });
    Ok(100.0 * sum / kept.len() as f64)
}

/// Root relative squared error: prediction error relative to the
/// always-predict-the-mean baseline.
pub fn rrse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_inputs(actual, predicted)?;
    let n = actual.len();
    let mean = pairwise_sum(actual) / n as f64;
    let denom = pairwise_sum_by(n, |i| {
        let d = mean - actual[i];
        d * d
    });
    if denom <= 0.0 {
        return Err(MetricsError::ConstantActuals);
    }
    let num = pairwise_sum_by(n, |i| {
        let d = predicted[i] - actual[i];
        d * d
    });
    Ok((num / denom).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rmse_identity_and_hand_values() {
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rmse_homogeneous_under_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..50).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let c = 3.5;
        let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let base = rmse(&x, &y).unwrap();
        assert!((rmse(&xs, &ys).unwrap() - c * base).abs() < 1e-10);
    }

    #[test]
    fn mae_hand_values_and_bounded_by_rmse() {
        let v = mae(&[1.0, 4.0], &[2.0, 2.0]).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(2..100);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            assert!(mae(&x, &y).unwrap() <= rmse(&x, &y).unwrap() + 1e-12);
        }
    }

    #[test]
    fn mape_hand_value_and_zero_guard() {
        let v = mape(&[100.0, 200.0], &[110.0, 180.0]).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
        let x = vec![5.0, 5.0];
        assert_eq!(mape(&x, &x).unwrap(), 0.0);
        match mape(&[1.0, 0.0, 2.0], &[1.0, 1.0, 2.0]) {
            Err(MetricsError::ZeroDenominator { indices }) => assert_eq!(indices, vec![1]),
            other => panic!("expected zero-denominator error, got {other:?}"),
        }
        let v = mape_with(&[1.0, 0.0, 2.0], &[2.0, 1.0, 1.0], 1e-9, ZeroPolicy::Exclude).unwrap();
        assert!((v - 75.0).abs() < 1e-12);
    }

    #[test]
    fn rrse_hand_values() {
        // Predicting the mean of the actuals gives exactly 1.
        let v = rrse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(rrse(&x, &x).unwrap(), 0.0);
        assert!(matches!(
            rrse(&[2.0, 2.0], &[1.0, 3.0]),
            Err(MetricsError::ConstantActuals)
        ));
    }

    #[test]
    fn rrse_invariant_under_common_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..80).map(|_| rng.gen_range(1.0..9.0)).collect();
        let y: Vec<f64> = (0..80).map(|_| rng.gen_range(1.0..9.0)).collect();
        let b = 123.25;
        let xs: Vec<f64> = x.iter().map(|v| v + b).collect();
        let ys: Vec<f64> = y.iter().map(|v| v + b).collect();
        assert!((rrse(&x, &y).unwrap() - rrse(&xs, &ys).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn symmetry_and_asymmetry() {
        let x = vec![1.0, 2.0, 4.0];
        let y = vec![2.0, 1.0, 5.0];
        assert!((rmse(&x, &y).unwrap() - rmse(&y, &x).unwrap()).abs() < 1e-15);
        assert!((mae(&x, &y).unwrap() - mae(&y, &x).unwrap()).abs() < 1e-15);
        // Swapping the roles changes both denominators.
        assert!((mape(&x, &y).unwrap() - mape(&y, &x).unwrap()).abs() > 1e-3);
        assert!((rrse(&x, &y).unwrap() - rrse(&y, &x).unwrap()).abs() > 1e-3);
    }

    // Naive single-pass loop versions, kept deliberately independent of the
    // implementations above.
    fn naive_row(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
        let n = x.len() as f64;
        let mut ss = 0.0;
        let mut sa = 0.0;
        let mut sp = 0.0;
        let mut mean = 0.0;
        for i in 0..x.len() {
            ss += (x[i] - y[i]) * (x[i] - y[i]);
            sa += (x[i] - y[i]).abs();
            sp += (x[i] - y[i]).abs() / x[i].abs();
            mean += x[i];
        }
        mean /= n;
        let mut dd = 0.0;
        for &xi in x {
            dd += (mean - xi) * (mean - xi);
        }
        ((ss / n).sqrt(), sa / n, 100.0 * sp / n, (ss / dd).sqrt())
    }

    #[test]
    fn agrees_with_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.gen_range(10..2000);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..100.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..100.0)).collect();
            let (r, a, p, q) = naive_row(&x, &y);
            let rel = |u: f64, v: f64| (u - v).abs() / v.abs().max(1.0);
            assert!(rel(rmse(&x, &y).unwrap(), r) < 1e-12);
            assert!(rel(mae(&x, &y).unwrap(), a) < 1e-12);
            assert!(rel(mape(&x, &y).unwrap(), p) < 1e-12);
            assert!(rel(rrse(&x, &y).unwrap(), q) < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_exact_on_long_vectors() {
        let xs: Vec<f64> = (0..20000).map(|i| (i as f64) * 1e-7 + 0.1).collect();
        let exact: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - exact).abs() / exact < 1e-12);
    }
}
