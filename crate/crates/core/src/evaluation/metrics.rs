use serde::{Deserialize, Serialize};

use crate::domain::LoadSegment;
use crate::error::{Result, SspError};

/// RMAE, MaxDiff and MinDiff of one predicted day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayMetrics {
    pub rmae: f64,
    /// Largest `predicted - actual`, signed.
    pub maxdiff: f64,
    /// Smallest `predicted - actual`, signed.
    pub mindiff: f64,
}

fn check(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(SspError::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(SspError::InvalidSegment("empty segment".into()));
    }
    if let Some((index, &value)) = actual
        .iter()
        .enumerate()
        .find(|(_, v)| v.is_nan() || **v <= 0.0)
    {
        return Err(SspError::NonPositiveActual { index, value });
    }
    Ok(())
}

/// `(1/P) sum_i |pred_i - act_i| / act_i`.
pub fn rmae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual)?;
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs() / a)
        .sum();
    Ok(sum / actual.len() as f64)
}

pub fn score_values(predicted: &[f64], actual: &[f64]) -> Result<DayMetrics> {
    let rmae = rmae(predicted, actual)?;
    let (mut maxdiff, mut mindiff) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, a) in predicted.iter().zip(actual) {
        let d = p - a;
        maxdiff = maxdiff.max(d);
        mindiff = mindiff.min(d);
    }
    Ok(DayMetrics {
        rmae,
        maxdiff,
        mindiff,
    })
}

/// Scores a prediction against the realized day, both on the load scale.
pub fn score_day(predicted: &LoadSegment, actual: &LoadSegment) -> Result<DayMetrics> {
    if predicted.grid() != actual.grid() {
        return Err(SspError::InvalidGrid(
            "prediction and actual use different grids".into(),
        ));
    }
    score_values(predicted.values(), actual.values())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::domain::TimeGrid;

    fn seg(v: &[f64]) -> LoadSegment {
        LoadSegment::new(Arc::new(TimeGrid::daily(v.len()).unwrap()), v.to_vec()).unwrap()
    }

    #[test]
    fn fixtures() {
        let m = score_day(&seg(&[110.0, 90.0]), &seg(&[100.0, 100.0])).unwrap();
        assert!((m.rmae - 0.1).abs() < 1e-12);
        assert_eq!((m.maxdiff, m.mindiff), (10.0, -10.0));

        let m = score_day(&seg(&[105.0, 105.0]), &seg(&[100.0, 100.0])).unwrap();
        assert!((m.rmae - 0.05).abs() < 1e-12);
        assert_eq!((m.maxdiff, m.mindiff), (5.0, 5.0));

        let x = seg(&[3.0, 7.5, 1.25]);
        let m = score_day(&x, &x).unwrap();
        assert_eq!((m.rmae, m.maxdiff, m.mindiff), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive_actuals() {
        assert_eq!(
            rmae(&[1.0, 1.0], &[1.0, 0.0]),
            Err(SspError::NonPositiveActual {
                index: 1,
                value: 0.0
            })
        );
        assert!(rmae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn different_grids() {
        let a = seg(&[1.0, 2.0]);
        let b =
            LoadSegment::new(Arc::new(TimeGrid::new(0, 60, 2).unwrap()), vec![1.0, 2.0]).unwrap();
        assert!(score_day(&a, &b).is_err());
    }

    proptest! {
        #[test]
        fn scale_invariance(
            pairs in prop::collection::vec((0.1f64..100.0, 0.1f64..100.0), 2..30),
            c in 0.01f64..100.0,
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = score_values(&p, &a).unwrap();
            let pc: Vec<f64> = p.iter().map(|v| v * c).collect();
            let ac: Vec<f64> = a.iter().map(|v| v * c).collect();
            let scaled = score_values(&pc, &ac).unwrap();
            prop_assert!((scaled.rmae - base.rmae).abs() <= 1e-12 * base.rmae.max(1.0));
            prop_assert!((scaled.maxdiff - c * base.maxdiff).abs() <= 1e-9 * (c * 100.0));
            prop_assert!((scaled.mindiff - c * base.mindiff).abs() <= 1e-9 * (c * 100.0));
            prop_assert!(base.mindiff <= base.maxdiff && base.rmae >= 0.0);
        }
    }
}
