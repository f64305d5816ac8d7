//! Comparison predictors: same-group persistence and a kernel predictor that
//! conditions on the last observed segment.

use crate::domain::{convex_combination, rescale_day, DistanceSpec, LoadSegment};
use crate::error::{Result, SspError};
use crate::ingestion::{DayGroup, HistoryWindow};
use crate::predictor::{
    nearest_weights, segment_distances, weights_from_distances, KernelSpec, WeightVector,
};

/// Index of the most recent day of `group`.
pub fn persistence_index(history: &HistoryWindow, group: DayGroup) -> Result<usize> {
    history
        .records()
        .iter()
        .rposition(|r| r.meta.group == group)
        .ok_or_else(|| SspError::NoCandidates {
            group: group.to_string(),
            window: history.len(),
        })
}

/// Shape of the most recent same-group day.
pub fn predict_persistence(history: &HistoryWindow, group: DayGroup) -> Result<LoadSegment> {
    rescale_day(&history.records()[persistence_index(history, group)?].load)
}

/// Weights `v_r` proportional to `K_h(D(S_{r-1}, S_L))` for `r = 2..L`; the
/// first day never gets weight. Returns the prediction, the weights (length
/// `L`, first entry zero) and whether the nearest-predecessor fallback was used.
pub fn conditional_kernel(
    shapes: &[&[f64]],
    kernel: &KernelSpec,
    dist: &DistanceSpec,
) -> Result<(Vec<f64>, WeightVector, bool)> {
    let l = shapes.len();
    if l < 2 {
        return Err(SspError::InsufficientHistory(format!(
            "conditional kernel needs two days, got {l}"
        )));
    }
    let last = shapes[l - 1];
    let d = segment_distances(&shapes[..l - 1], last, dist)?;
    let (v, fell_back) = match weights_from_distances(&d, kernel) {
        Ok(v) => (v, false),
        Err(SspError::NoSegmentWithinBandwidth(h)) => {
            tracing::warn!("no predecessor within bandwidth {h}, using the nearest one");
            (nearest_weights(&d), true)
        }
        Err(e) => return Err(e),
    };
    let successors = &shapes[1..];
    let pred = convex_combination(successors, v.as_slice())?;
    let mut full = Vec::with_capacity(l);
    full.push(0.0);
    full.extend_from_slice(v.as_slice());
    Ok((pred, WeightVector::new(full)?, fell_back))
}

/// Conditional-kernel prediction on daily-max shapes.
pub fn predict_conditional_kernel(
    history: &HistoryWindow,
    kernel: &KernelSpec,
    dist: &DistanceSpec,
) -> Result<LoadSegment> {
    let shapes = history
        .records()
        .iter()
        .map(|r| rescale_day(&r.load).map(LoadSegment::into_values))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<&[f64]> = shapes.iter().map(Vec::as_slice).collect();
    let (pred, _, _) = conditional_kernel(&rows, kernel, dist)?;
    let grid = history.records()[0].load.grid().clone();
    LoadSegment::new(grid, pred)
}
