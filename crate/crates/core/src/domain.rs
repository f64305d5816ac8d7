//! Fixed-grid daily segments, segment distances and daily-max rescaling.
//!
//! A day is observed on `P` equidistant intra-day points. Load segments are
//! either raw (megawatts) or in shape form, i.e. divided by their daily
//! maximum with the maximum kept alongside so the decomposition can be undone.

use std::sync::Arc;

use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};

const SECONDS_PER_DAY: u32 = 86_400;

/// Equidistant intra-day sampling grid `t_1 < ... < t_P`.
///
/// Labels are `start + i * step` seconds after midnight, so spacing is exact
/// by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeGrid {
    start_secs: u32,
    step_secs: u32,
    points: usize,
}

impl TimeGrid {
    pub fn new(start_secs: u32, step_secs: u32, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(SspError::InvalidGrid(format!(
                "need at least 2 points per day, got {points}"
            )));
        }
        if step_secs == 0 {
            return Err(SspError::InvalidGrid("step must be positive".into()));
        }
        let last = u64::from(start_secs) + u64::from(step_secs) * (points as u64 - 1);
        if last >= u64::from(SECONDS_PER_DAY) {
            return Err(SspError::InvalidGrid(format!(
                "{points} points of {step_secs}s starting at {start_secs}s overrun the day"
            )));
        }
        Ok(Self {
            start_secs,
            step_secs,
            points,
        })
    }

    /// Grid covering the whole day from midnight, e.g. `P = 96` for quarter hours.
    pub fn daily(points: usize) -> Result<Self> {
        if points == 0 || !(SECONDS_PER_DAY as usize).is_multiple_of(points) {
            return Err(SspError::InvalidGrid(format!(
                "{points} points do not divide the day into whole seconds"
            )));
        }
        Self::new(0, SECONDS_PER_DAY / points as u32, points)
    }

    /// Quarter-hour grid, `P = 96`.
    pub fn quarter_hourly() -> Self {
        Self::daily(96).expect("96 divides the day")
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step_secs(&self) -> u32 {
        self.step_secs
    }

    pub fn start_secs(&self) -> u32 {
        self.start_secs
    }

    /// Seconds after midnight of point `i` (0-based).
    pub fn offset_secs(&self, i: usize) -> u32 {
        self.start_secs + self.step_secs * i as u32
    }

    pub fn label(&self, i: usize) -> NaiveTime {
        NaiveTime::from_num_seconds_from_midnight_opt(self.offset_secs(i), 0)
            .expect("grid offsets stay within the day")
    }

    pub fn labels(&self) -> Vec<NaiveTime> {
        (0..self.points).map(|i| self.label(i)).collect()
    }

    /// Grid index of a clock time, if it falls exactly on a grid point.
    pub fn index_of(&self, time: NaiveTime) -> Option<usize> {
        use chrono::Timelike;
        if time.nanosecond() != 0 {
            return None;
        }
        let secs = time.num_seconds_from_midnight();
        if secs < self.start_secs || !(secs - self.start_secs).is_multiple_of(self.step_secs) {
            return None;
        }
        let idx = ((secs - self.start_secs) / self.step_secs) as usize;
        (idx < self.points).then_some(idx)
    }
}

/// One day of load on a fixed grid.
///
/// `scale` is `Some(max)` exactly when the segment is in shape form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSegment {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    scale: Option<f64>,
}

impl LoadSegment {
    /// Raw segment (no recorded scale).
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self {
            grid,
            values,
            scale: None,
        })
    }

    /// Segment already in shape form with its daily maximum.
    pub fn shape(grid: Arc<TimeGrid>, values: Vec<f64>, scale: f64) -> Result<Self> {
        check_values(&grid, &values)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(SspError::NonPositiveScale(scale));
        }
        Ok(Self {
            grid,
            values,
            scale: Some(scale),
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    pub fn is_shape(&self) -> bool {
        self.scale.is_some()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_values(grid: &TimeGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.points() {
        return Err(SspError::LengthMismatch {
            expected: grid.points(),
            actual: values.len(),
        });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SspError::InvalidSegment(format!(
            "non-finite value at point {i}"
        )));
    }
    Ok(())
}

/// Partially observed daily temperature curve.
///
/// Only the entries listed in `mask` carry data; the rest are stored as zero
/// and never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSegment {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
    mask: Vec<usize>,
}

impl TemperatureSegment {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>, mut mask: Vec<usize>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(SspError::LengthMismatch {
                expected: grid.points(),
                actual: values.len(),
            });
        }
        mask.sort_unstable();
        mask.dedup();
        if mask.is_empty() {
            return Err(SspError::EmptySubset);
        }
        for &i in &mask {
            if i >= values.len() {
                return Err(SspError::IndexOutOfBounds {
                    index: i,
                    len: values.len(),
                });
            }
            if !values[i].is_finite() {
                return Err(SspError::InvalidSegment(format!(
                    "non-finite temperature at point {i}"
                )));
            }
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if mask.binary_search(&i).is_err() {
                *v = 0.0;
            }
        }
        Ok(Self { grid, values, mask })
    }

    /// Fully observed temperature curve.
    pub fn full(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        let mask = (0..values.len()).collect();
        Self::new(grid, values, mask)
    }

    /// Builds a segment from per-point readings, `None` meaning unobserved.
    pub fn from_partial(grid: Arc<TimeGrid>, readings: &[Option<f64>]) -> Result<Self> {
        let mask = readings
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|_| i))
            .collect();
        let values = readings.iter().map(|v| v.unwrap_or(0.0)).collect();
        Self::new(grid, values, mask)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn covers(&self, points: &[usize]) -> bool {
        points.iter().all(|i| self.mask.binary_search(i).is_ok())
    }

    /// Copy restricted to `points`, which must already be observed.
    pub fn restrict(&self, points: &[usize]) -> Result<Self> {
        if let Some(&missing) = points.iter().find(|i| self.mask.binary_search(i).is_err()) {
            return Err(SspError::ForecastMaskMismatch(missing));
        }
        Self::new(self.grid.clone(), self.values.clone(), points.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    #[default]
    Euclidean,
    MeanAbsolute,
    MaxAbsolute,
}

impl std::str::FromStr for DistanceKind {
    type Err = SspError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "mean-absolute" => Ok(Self::MeanAbsolute),
            "max-absolute" => Ok(Self::MaxAbsolute),
            other => Err(SspError::InvalidConfig(format!(
                "unknown distance '{other}'"
            ))),
        }
    }
}

/// A distance on `R^P`, optionally restricted to a subset of grid points.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DistanceSpec {
    pub kind: DistanceKind,
    /// 0-based grid indices; `None` means every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_subset: Option<Vec<usize>>,
}

impl DistanceSpec {
    pub fn new(kind: DistanceKind) -> Self {
        Self {
            kind,
            point_subset: None,
        }
    }

    pub fn restricted(kind: DistanceKind, subset: Vec<usize>) -> Self {
        Self {
            kind,
            point_subset: Some(subset),
        }
    }

    /// Checks the subset against a vector length.
    pub fn validate(&self, len: usize) -> Result<()> {
        match &self.point_subset {
            None if len == 0 => Err(SspError::EmptySubset),
            None => Ok(()),
            Some(s) if s.is_empty() => Err(SspError::EmptySubset),
            Some(s) => match s.iter().find(|&&i| i >= len) {
                Some(&index) => Err(SspError::IndexOutOfBounds { index, len }),
                None => Ok(()),
            },
        }
    }
}

/// Distance between two curves on the same grid.
pub fn distance(a: &[f64], b: &[f64], spec: &DistanceSpec) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SspError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    spec.validate(a.len())?;
    Ok(distance_unchecked(a, b, spec))
}

/// As [`distance`], for callers that validated lengths and subset already.
pub(crate) fn distance_unchecked(a: &[f64], b: &[f64], spec: &DistanceSpec) -> f64 {
    match &spec.point_subset {
        Some(subset) => reduce(spec.kind, subset.iter().map(|&i| a[i] - b[i]), subset.len()),
        None => reduce(spec.kind, a.iter().zip(b).map(|(x, y)| x - y), a.len()),
    }
}

fn reduce(kind: DistanceKind, diffs: impl Iterator<Item = f64>, n: usize) -> f64 {
    match kind {
        DistanceKind::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        DistanceKind::MeanAbsolute => diffs.map(f64::abs).sum::<f64>() / n as f64,
        DistanceKind::MaxAbsolute => diffs.map(f64::abs).fold(0.0, f64::max),
    }
}

/// Coordinate-wise `sum_r weights[r] * rows[r][i]`, summed in row order.
///
/// Weights are expected to be nonnegative and sum to one. Each coordinate is
/// clamped to the range spanned by rows with positive weight: rounding can
/// push a convex combination one ulp outside its hull.
pub fn convex_combination(rows: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
    if rows.len() != weights.len() {
        return Err(SspError::LengthMismatch {
            expected: rows.len(),
            actual: weights.len(),
        });
    }
    let Some(first) = rows.first() else {
        return Err(SspError::InsufficientHistory(
            "no segments to combine".into(),
        ));
    };
    let p = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != p) {
        return Err(SspError::LengthMismatch {
            expected: p,
            actual: bad.len(),
        });
    }
    let mut acc = vec![0.0; p];
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for (row, &w) in rows.iter().zip(weights) {
        if w > 0.0 {
            for i in 0..p {
                acc[i] += w * row[i];
                lo[i] = lo[i].min(row[i]);
                hi[i] = hi[i].max(row[i]);
            }
        }
    }
    for i in 0..p {
        if lo[i] <= hi[i] {
            acc[i] = acc[i].clamp(lo[i], hi[i]);
        }
    }
    Ok(acc)
}

/// Divides a day by its maximum and records the maximum as the scale.
pub fn rescale_day(seg: &LoadSegment) -> Result<LoadSegment> {
    let max = seg.max();
    if max.is_nan() || max <= 0.0 {
        return Err(SspError::NonPositiveMax(max));
    }
    let values = seg.values.iter().map(|v| v / max).collect();
    Ok(LoadSegment {
        grid: seg.grid.clone(),
        values,
        scale: Some(max),
    })
}

/// Multiplies a shape back onto the load scale.
pub fn unscale(seg: &LoadSegment, provided_max: f64) -> Result<LoadSegment> {
    if !(provided_max.is_finite() && provided_max > 0.0) {
        return Err(SspError::NonPositiveScale(provided_max));
    }
    let values = seg.values.iter().map(|v| v * provided_max).collect();
    Ok(LoadSegment {
        grid: seg.grid.clone(),
        values,
        scale: Some(provided_max),
    })
}
