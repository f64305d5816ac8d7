//! Kernel weights over past segments and the weighted-average prediction.

use serde::{Deserialize, Serialize};

use super::kernel::{KernelKind, KernelSpec};
use crate::domain::{convex_combination, distance, DistanceSpec};
use crate::error::{Result, SspError};

const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Nonnegative weights summing to one, aligned with the history order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(SspError::InvalidConfig("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SspError::InvalidConfig(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(SspError::InvalidConfig(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// All mass on `index`.
    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized kernel weights from precomputed distances.
///
/// For the Gaussian kernel the exponent is shifted by the smallest distance,
/// which leaves the normalized weights unchanged but keeps them from
/// underflowing at small bandwidths.
pub fn weights_from_distances(distances: &[f64], kernel: &KernelSpec) -> Result<WeightVector> {
    kernel.validate()?;
    if distances.is_empty() {
        return Err(SspError::InsufficientHistory(
            "no segments to weight".into(),
        ));
    }
    let raw: Vec<f64> = match kernel.kind {
        KernelKind::Gaussian => {
            let h2 = 2.0 * kernel.bandwidth * kernel.bandwidth;
            let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
            distances
                .iter()
                .map(|d| (-(d * d - d_min * d_min) / h2).exp())
                .collect()
        }
        _ => distances.iter().map(|&d| kernel.eval(d)).collect(),
    };
    let total: f64 = raw.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(SspError::NoSegmentWithinBandwidth(kernel.bandwidth));
    }
    Ok(WeightVector(raw.into_iter().map(|k| k / total).collect()))
}

/// All mass split evenly over the segments at the smallest distance.
pub fn nearest_weights(distances: &[f64]) -> WeightVector {
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let count = distances.iter().filter(|&&d| d == d_min).count();
    WeightVector(
        distances
            .iter()
            .map(|&d| if d == d_min { 1.0 / count as f64 } else { 0.0 })
            .collect(),
    )
}

/// Like [`weights_from_distances`], falling back to the nearest segment when
/// no segment falls inside a compact kernel's support. The flag reports the
/// fallback.
pub fn weights_or_nearest(distances: &[f64], kernel: &KernelSpec) -> Result<(WeightVector, bool)> {
    match weights_from_distances(distances, kernel) {
        Ok(w) => Ok((w, false)),
        Err(SspError::NoSegmentWithinBandwidth(h)) => {
            tracing::warn!("no segment within bandwidth {h}, using the nearest segment");
            Ok((nearest_weights(distances), true))
        }
        Err(e) => Err(e),
    }
}

pub fn segment_distances(
    shapes: &[&[f64]],
    reference: &[f64],
    dist: &DistanceSpec,
) -> Result<Vec<f64>> {
    shapes
        .iter()
        .map(|s| distance(s, reference, dist))
        .collect()
}

/// `w_r = K_h(D(S_r, ref)) / sum_l K_h(D(S_l, ref))`.
pub fn compute_weights(
    shapes: &[&[f64]],
    reference: &[f64],
    kernel: &KernelSpec,
    dist: &DistanceSpec,
) -> Result<WeightVector> {
    weights_from_distances(&segment_distances(shapes, reference, dist)?, kernel)
}

/// Coordinate-wise `sum_r w_r S_r`.
pub fn predict_shape(shapes: &[&[f64]], weights: &WeightVector) -> Result<Vec<f64>> {
    convex_combination(shapes, weights.as_slice())
}
